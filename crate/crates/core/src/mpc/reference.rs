use crate::error::{FodsError, Result};
use crate::Vector;

/// Reference states `x_ref[0..]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    pub samples: Vec<Vector>,
}

impl ReferenceSignal {
    pub fn new(samples: Vec<Vector>) -> Result<Self> {
        if samples.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(FodsError::Config("reference has non-finite samples".into()));
        }
        Ok(ReferenceSignal { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// 50% duty rectangular wave, `+amplitude` on the first half of each period.
///
/// The period is `round(fs / freq)` samples; every channel carries the same
/// value.
pub fn square_wave_reference(freq: f64, fs: f64, amplitude: f64, steps: usize, channels: usize) -> Result<ReferenceSignal> {
    if !(freq > 0.0 && fs > 0.0 && freq < fs / 2.0) {
        return Err(FodsError::Config(format!("square wave needs 0 < freq < fs/2, got freq {freq}, fs {fs}")));
    }
    if !amplitude.is_finite() {
        return Err(FodsError::Config("amplitude must be finite".into()));
    }
    let period = (fs / freq).round() as usize;
    let samples = (0..steps)
        .map(|k| {
            let v = if 2 * (k % period) < period { amplitude } else { -amplitude };
            Vector::from_element(channels, v)
        })
        .collect();
    Ok(ReferenceSignal { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_hertz_at_160() {
        let r = square_wave_reference(8.0, 160.0, 1.0, 40, 1).unwrap();
        let v: Vec<f64> = r.samples.iter().map(|s| s[0]).collect();
        let period: Vec<f64> = [vec![1.0; 10], vec![-1.0; 10]].concat();
        assert_eq!(v, [period.clone(), period].concat());
    }

    #[test]
    fn zero_amplitude_and_replication() {
        let r = square_wave_reference(8.0, 160.0, 0.0, 30, 2).unwrap();
        assert!(r.samples.iter().all(|s| s.iter().all(|v| v.abs() == 0.0)));
        let r = square_wave_reference(8.0, 160.0, 1.0, 50, 4).unwrap();
        assert!(r.samples.iter().all(|s| s.iter().all(|v| *v == s[0])));
    }

    #[test]
    fn nyquist_is_rejected() {
        assert!(square_wave_reference(80.0, 160.0, 1.0, 10, 1).is_err());
        assert!(square_wave_reference(0.0, 160.0, 1.0, 10, 1).is_err());
    }
}
