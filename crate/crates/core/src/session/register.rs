use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frame::CropSource;
use super::SessionConfig;
use crate::emotion::{register_user, EmotionLabel, ProfileStore, UserProfile};
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::ocular::{train_eye_model, EyeState, LinearEyeModel};

/// One labelled crop. Labels are emotion names or `open` / `closed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub label: String,
    pub crop: CropSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub profile: Option<UserProfile>,
    pub eye_model: Option<LinearEyeModel>,
}

/// Reads a manifest, trains whatever its labels allow and stores the result.
///
/// Emotion crops build the appearance profile (all six labels required);
/// eye crops train the eye-state model. Crop paths resolve against the
/// manifest's directory. Nothing is written unless every model trains.
pub fn register_from_manifest(
    user_id: &str,
    manifest: &Path,
    store: &ProfileStore,
    cfg: &SessionConfig,
) -> Result<Registration> {
    let (face_grid, eye_grid) = (cfg.face_grid, cfg.eye_grid);
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut faces = Vec::new();
    let mut eyes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| Error::parse(i + 1, "<record>", e.to_string()))?;
        let img = entry.crop.load(base)?;
        if let Ok(label) = entry.label.parse::<EmotionLabel>() {
            faces.push((label, extract_features(&img, face_grid)?));
        } else if let Ok(state) = entry.label.parse::<EyeState>() {
            eyes.push((state, extract_features(&img, eye_grid)?));
        } else {
            return Err(Error::parse(i + 1, "label", format!("unknown label `{}`", entry.label)));
        }
    }
    if faces.is_empty() && eyes.is_empty() {
        return Err(Error::InvalidParameter("manifest contains no crops".into()));
    }
    let profile = if faces.is_empty() {
        None
    } else {
        Some(register_user(user_id, &faces, cfg.pca_components)?)
    };
    let eye_model = if eyes.is_empty() {
        None
    } else {
        Some(train_eye_model(&eyes, cfg.eye_lambda, cfg.eye_epochs)?)
    };
    if let Some(p) = &profile {
        store.store_profile(p)?;
    }
    if let Some(m) = &eye_model {
        store.store_eye_model(user_id, eye_grid, m)?;
    }
    Ok(Registration { profile, eye_model })
}
