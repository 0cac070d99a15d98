use super::MetricError;

/// `dot(a, b) / (|a| |b|)`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(MetricError::UndefinedCosine);
    }
    Ok(dot / (na * nb))
}

/// `Σ a(k) ln(a(k) / b(k))` over coordinates where both are nonzero.
/// Natural log; the result may be negative.
pub fn kl_divergence(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    let mut support = false;
    let mut sum = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        if x != 0.0 && y != 0.0 {
            support = true;
            sum += x * (x / y).ln();
        }
    }
    if support {
        Ok(sum)
    } else {
        Err(MetricError::EmptySupport)
    }
}
