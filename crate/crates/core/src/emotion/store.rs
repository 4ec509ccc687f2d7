use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{EmotionLabel, UserProfile};
use crate::error::{Error, Result};
use crate::features::PcaModel;
use crate::ocular::LinearEyeModel;

pub const PROFILE_FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ProfileRecord {
    format: u32,
    user_id: String,
    layout: [usize; 3],
    pca: PcaModel,
    templates: BTreeMap<EmotionLabel, Vec<f64>>,
    sample_counts: BTreeMap<EmotionLabel, usize>,
}

#[derive(Serialize, Deserialize)]
struct EyeModelRecord {
    format: u32,
    user_id: String,
    grid: [usize; 2],
    model: LinearEyeModel,
}

/// One JSON record per user under a directory.
///
/// Writes go through a temporary file and a rename, so readers never see a
/// partial record.
#[derive(Debug)]
pub struct ProfileStore {
    root: PathBuf,
    write_lock: Mutex<()>,
}

fn check_user_id(user_id: &str) -> Result<()> {
    let ok = !user_id.is_empty()
        && !user_id.starts_with('.')
        && user_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("user id `{user_id}` is not a valid file name")))
    }
}

impl ProfileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self {
            root,
            write_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn profile_path(&self, user_id: &str) -> PathBuf {
        self.root.join(format!("{user_id}.json"))
    }

    pub fn eye_model_path(&self, user_id: &str) -> PathBuf {
        self.root.join(format!("{user_id}.eye.json"))
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    fn read(&self, path: &Path, user_id: &str) -> Result<Vec<u8>> {
        match fs::read(path) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::UnknownUser(user_id.to_string())),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn store_profile(&self, profile: &UserProfile) -> Result<()> {
        check_user_id(&profile.user_id)?;
        profile.validate()?;
        let (r, c, b) = profile.layout;
        let record = ProfileRecord {
            format: PROFILE_FORMAT,
            user_id: profile.user_id.clone(),
            layout: [r, c, b],
            pca: profile.pca.clone(),
            templates: profile.templates.clone(),
            sample_counts: profile.sample_counts.clone(),
        };
        let bytes = serde_json::to_vec_pretty(&record)?;
        self.write_atomic(&self.profile_path(&profile.user_id), &bytes)
    }

    pub fn load_profile(&self, user_id: &str) -> Result<UserProfile> {
        check_user_id(user_id)?;
        let path = self.profile_path(user_id);
        let bytes = self.read(&path, user_id)?;
        let corrupt = |reason: String| Error::CorruptRecord {
            path: path.clone(),
            reason,
        };
        let rec: ProfileRecord = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if rec.format != PROFILE_FORMAT {
            return Err(corrupt(format!("unsupported format {}", rec.format)));
        }
        if rec.user_id != user_id {
            return Err(corrupt(format!("record belongs to `{}`", rec.user_id)));
        }
        let pca = PcaModel::from_parts(
            rec.pca.mean().to_vec(),
            rec.pca.components().to_vec(),
            rec.pca.variances().to_vec(),
        )
        .map_err(|e| corrupt(e.to_string()))?;
        let profile = UserProfile {
            user_id: rec.user_id,
            pca,
            layout: (rec.layout[0], rec.layout[1], rec.layout[2]),
            templates: rec.templates,
            sample_counts: rec.sample_counts,
        };
        profile.validate().map_err(|e| corrupt(e.to_string()))?;
        Ok(profile)
    }

    pub fn store_eye_model(&self, user_id: &str, grid: (usize, usize), model: &LinearEyeModel) -> Result<()> {
        check_user_id(user_id)?;
        let record = EyeModelRecord {
            format: PROFILE_FORMAT,
            user_id: user_id.to_string(),
            grid: [grid.0, grid.1],
            model: model.clone(),
        };
        let bytes = serde_json::to_vec_pretty(&record)?;
        self.write_atomic(&self.eye_model_path(user_id), &bytes)
    }

    /// Returns the model and the block grid its features use.
    pub fn load_eye_model(&self, user_id: &str) -> Result<(LinearEyeModel, (usize, usize))> {
        check_user_id(user_id)?;
        let path = self.eye_model_path(user_id);
        let bytes = self.read(&path, user_id)?;
        let corrupt = |reason: String| Error::CorruptRecord {
            path: path.clone(),
            reason,
        };
        let rec: EyeModelRecord = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if rec.format != PROFILE_FORMAT || rec.user_id != user_id {
            return Err(corrupt("format or user mismatch".into()));
        }
        if rec.model.weights().iter().any(|w| !w.is_finite()) || !rec.model.bias().is_finite() {
            return Err(corrupt("non-finite weights".into()));
        }
        Ok((rec.model, (rec.grid[0], rec.grid[1])))
    }
}
