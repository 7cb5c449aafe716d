//! Video-level features from per-frame features, optionally extended with an
//! audio descriptor.

use crate::error::{Error, Result};
use crate::io::item_key;
use crate::retrieval::VisualFeature;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatureSet {
    pub video_id: String,
    pub frames: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeature {
    pub video_id: String,
    pub values: Vec<f64>,
}

/// Coordinatewise mean over frames.
pub fn mean_pool(set: &FrameFeatureSet) -> Result<VisualFeature> {
    let first = set
        .frames
        .first()
        .ok_or_else(|| Error::Empty(format!("video {:?} has no frames", set.video_id)))?;
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    for frame in &set.frames {
        if frame.len() != dim {
            return Err(Error::dims(format!("frames of {:?}", set.video_id), dim, frame.len()));
        }
        sum.iter_mut().zip(frame).for_each(|(s, v)| *s += v);
    }
    let n = set.frames.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(VisualFeature::new(set.video_id.clone(), sum))
}

/// Visual block first, audio block second.
pub fn concat_visual_audio(visual: &VisualFeature, audio: &AudioFeature) -> Result<VisualFeature> {
    if visual.id != audio.video_id {
        return Err(Error::Config(format!(
            "cannot join visual {:?} with audio {:?}",
            visual.id, audio.video_id
        )));
    }
    if let Some(bad) = audio.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!("audio of {:?} has value {bad}", audio.video_id)));
    }
    let mut values = Vec::with_capacity(visual.dim() + audio.values.len());
    values.extend_from_slice(&visual.values);
    values.extend_from_slice(&audio.values);
    Ok(VisualFeature::new(visual.id.clone(), values))
}

/// Groups frame rows `<video_id>#<frame>` by video, keeping first-appearance
/// order for videos and file order for frames.
pub fn group_frames(rows: Vec<VisualFeature>) -> Result<Vec<FrameFeatureSet>> {
    let mut sets: Vec<FrameFeatureSet> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for row in rows {
        if !row.id.contains('#') {
            return Err(Error::Config(format!(
                "frame id {:?} does not follow <video_id>#<frame>",
                row.id
            )));
        }
        let video = item_key(&row.id).to_string();
        let slot = *index.entry(video.clone()).or_insert_with(|| {
            sets.push(FrameFeatureSet {
                video_id: video,
                frames: Vec::new(),
            });
            sets.len() - 1
        });
        sets[slot].frames.push(row.values);
    }
    Ok(sets)
}
