//! Driving-pattern classification by vehicle speed band.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower edge of the medium band, km/h.
pub const MEDIUM_FROM_KMH: f64 = 35.0;
/// Lower edge of the high band, km/h.
pub const HIGH_FROM_KMH: f64 = 60.0;

/// Speed bands `[0, 35)`, `[35, 60)` and `[60, ∞)` km/h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivingPattern {
    #[serde(rename = "low")]
    LowSpeed,
    #[serde(rename = "medium")]
    MediumSpeed,
    #[serde(rename = "high")]
    HighSpeed,
}

impl DrivingPattern {
    pub const ALL: [DrivingPattern; 3] = [Self::LowSpeed, Self::MediumSpeed, Self::HighSpeed];

    pub fn name(self) -> &'static str {
        match self {
            Self::LowSpeed => "low",
            Self::MediumSpeed => "medium",
            Self::HighSpeed => "high",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "low" => Some(Self::LowSpeed),
            "medium" => Some(Self::MediumSpeed),
            "high" => Some(Self::HighSpeed),
            _ => None,
        }
    }
}

impl core::fmt::Display for DrivingPattern {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify_speed(v_kmh: f64) -> Result<DrivingPattern> {
    if !(v_kmh >= 0.0) {
        return Err(Error::NegativeSpeed(v_kmh));
    }
    Ok(if v_kmh < MEDIUM_FROM_KMH {
        DrivingPattern::LowSpeed
    } else if v_kmh < HIGH_FROM_KMH {
        DrivingPattern::MediumSpeed
    } else {
        DrivingPattern::HighSpeed
    })
}

/// Half-open run `[start, end)` of stages sharing one pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSegment {
    pub start: usize,
    pub end: usize,
    pub pattern: DrivingPattern,
}

impl PatternSegment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Run-length encode the per-stage patterns of a speed trace.
pub fn segment_speeds(speeds: &[f64]) -> Result<Vec<PatternSegment>> {
    if speeds.is_empty() {
        return Err(Error::Empty("drive cycle"));
    }
    let mut out: Vec<PatternSegment> = Vec::new();
    for (k, v) in speeds.iter().enumerate() {
        let p = classify_speed(*v)?;
        match out.last_mut() {
            Some(seg) if seg.pattern == p => seg.end = k + 1,
            _ => out.push(PatternSegment {
                start: k,
                end: k + 1,
                pattern: p,
            }),
        }
    }
    Ok(out)
}

/// Absorb segments shorter than `min_len` stages into their predecessor (or
/// successor, for a short leading run), then re-merge equal neighbours.
/// `min_len <= 1` leaves the segmentation unchanged.
pub fn smooth_segments(segments: &[PatternSegment], min_len: usize) -> Vec<PatternSegment> {
    let mut out: Vec<PatternSegment> = Vec::with_capacity(segments.len());
    for seg in segments {
        if seg.len() < min_len {
            if let Some(prev) = out.last_mut() {
                prev.end = seg.end;
                continue;
            }
        }
        match out.last_mut() {
            Some(prev) if prev.pattern == seg.pattern || prev.len() < min_len => {
                // a short leading run takes the pattern of what follows
                if prev.pattern != seg.pattern {
                    prev.pattern = seg.pattern;
                }
                prev.end = seg.end;
            }
            _ => out.push(*seg),
        }
    }
    out
}

/// Per-stage labels reconstructed from segments.
pub fn expand_segments(segments: &[PatternSegment]) -> Vec<DrivingPattern> {
    segments
        .iter()
        .flat_map(|s| core::iter::repeat_n(s.pattern, s.len()))
        .collect()
}
