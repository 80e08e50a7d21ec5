use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::seeding;
use crate::{Error, Result};

/// One named, contiguous slice of the flat parameter vector.
///
/// Rank-1 segments are biases (zero-initialized); rank-2 segments are weights
/// stored `[in, out]` row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn is_bias(&self) -> bool {
        self.shape.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layout {
    segments: Vec<Segment>,
}

impl Layout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a segment; its offset is the current total length.
    pub fn push(mut self, name: impl Into<String>, shape: &[usize]) -> Self {
        let offset = self.len();
        self.segments.push(Segment {
            name: name.into(),
            shape: shape.to_vec(),
            offset,
        });
        self
    }

    /// Rebuild a layout from stored descriptors, checking contiguity.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        let mut expected = 0;
        for seg in &segments {
            if seg.offset != expected {
                return Err(Error::Format(format!(
                    "segment `{}` starts at {} but previous segments end at {}",
                    seg.name, seg.offset, expected
                )));
            }
            expected += seg.len();
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.offset + s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Name of the segment containing flat index `idx`.
    pub fn segment_of(&self, idx: usize) -> Option<&Segment> {
        self.segments.iter().find(|s| s.range().contains(&idx))
    }
}

/// Flat `f64` parameter vector with its segment layout.
///
/// `generation` is bumped on every mutable access so that forward caches can
/// detect being replayed against different parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Layout,
    generation: u64,
}

impl ParamVector {
    pub fn from_values(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::Contract(format!(
                "layout describes {} values but {} were supplied",
                layout.len(),
                values.len()
            )));
        }
        Ok(Self {
            values,
            layout,
            generation: 0,
        })
    }

    pub fn zeros(layout: Layout) -> Self {
        let values = vec![0.0; layout.len()];
        Self {
            values,
            layout,
            generation: 0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.generation = self.generation.wrapping_add(1);
        &mut self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment_values(&self, name: &str) -> Option<&[f64]> {
        self.layout.segment(name).map(|s| &self.values[s.range()])
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Uniform fan-based initialization: weights in ±sqrt(6 / (fan_in + fan_out)),
/// biases zero. Each segment draws from its own seeded stream.
pub fn init_params(layout: &Layout, seed: u64) -> Result<ParamVector> {
    if layout.is_empty() {
        return Err(Error::Config("parameter layout has no segments".into()));
    }
    let mut values = vec![0.0; layout.len()];
    for (i, seg) in layout.segments().iter().enumerate() {
        if seg.shape.is_empty() || seg.shape.contains(&0) {
            return Err(Error::Config(format!(
                "segment `{}` has non-positive shape {:?}",
                seg.name, seg.shape
            )));
        }
        if seg.is_bias() {
            continue;
        }
        let fan_in = seg.shape[0];
        let fan_out: usize = seg.shape[1..].iter().product();
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound)
            .map_err(|e| Error::Config(format!("segment `{}`: {e}", seg.name)))?;
        let mut rng = seeding::rng(seed, &[seeding::STREAM_INIT, i as u64]);
        for v in &mut values[seg.range()] {
            *v = dist.sample(&mut rng);
        }
    }
    ParamVector::from_values(layout.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_segments_start_at_zero() {
        let layout = Layout::new().push("w", &[4, 3]).push("b", &[3]);
        let p = init_params(&layout, 11).unwrap();
        assert_eq!(p.segment_values("b").unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn init_is_bitwise_deterministic() {
        let layout = Layout::new().push("w", &[10, 7]).push("b", &[7]);
        let a = init_params(&layout, 3).unwrap();
        let b = init_params(&layout, 3).unwrap();
        let bits = |p: &ParamVector| p.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = init_params(&layout, 4).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn weight_entries_respect_fan_bound() {
        let layout = Layout::new().push("w", &[100, 50]);
        let p = init_params(&layout, 0).unwrap();
        let bound = (6.0f64 / 150.0).sqrt();
        assert!(p.values().iter().all(|v| v.abs() <= bound && v.is_finite()));
        // the draw should actually use the range, not collapse near zero
        let max = p.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max > 0.9 * bound);
    }

    #[test]
    fn empty_layout_is_a_configuration_error() {
        assert!(matches!(init_params(&Layout::new(), 0), Err(Error::Config(_))));
        let zero = Layout::new().push("w", &[0, 3]);
        assert!(matches!(init_params(&zero, 0), Err(Error::Config(_))));
    }

    #[test]
    fn layout_offsets_are_contiguous() {
        let layout = Layout::new().push("a", &[2, 3]).push("b", &[3]).push("c", &[3, 1]);
        assert_eq!(layout.len(), 12);
        assert_eq!(layout.segment("b").unwrap().offset, 6);
        assert_eq!(layout.segment_of(9).unwrap().name, "c");
        assert!(Layout::from_segments(layout.segments().to_vec()).is_ok());
        let mut broken = layout.segments().to_vec();
        broken[1].offset = 5;
        assert!(Layout::from_segments(broken).is_err());
    }
}
