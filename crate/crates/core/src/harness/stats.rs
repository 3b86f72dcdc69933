//! Mean and sample standard deviation.

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); 0 for fewer than two values.
    pub std: f64,
}

/// Welford's streaming accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct StreamingStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl StreamingStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn summary(&self) -> Summary {
        let std = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            count: self.count,
            mean: self.mean,
            std,
        }
    }
}

impl FromIterator<f64> for StreamingStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|x| s.push(x));
        s
    }
}

/// Two-pass mean and sample standard deviation.
pub fn two_pass(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary::default();
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary { count, mean, std }
}
