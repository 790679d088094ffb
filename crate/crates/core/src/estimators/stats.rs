use serde::Serialize;

/// Sample moments of a run of scalar estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (`n − 1`) sample variance.
    pub variance: f64,
    pub se_mean: f64,
    /// `√((m₄ − s⁴(n−3)/(n−1))/n)` with `m₄` the fourth central moment.
    pub se_variance: f64,
}

pub fn sample_stats(v: &[f64]) -> SampleStats {
    let n = v.len();
    let nf = n as f64;
    let mean = v.iter().sum::<f64>() / nf;
    if n < 2 {
        return SampleStats {
            n,
            mean,
            variance: 0.0,
            se_mean: f64::INFINITY,
            se_variance: f64::INFINITY,
        };
    }
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in v {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let variance = m2 / (nf - 1.0);
    m4 /= nf;
    let vv = if n > 3 {
        (m4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf
    } else {
        f64::INFINITY
    };
    SampleStats {
        n,
        mean,
        variance,
        se_mean: (variance / nf).sqrt(),
        se_variance: vv.max(0.0).sqrt(),
    }
}
