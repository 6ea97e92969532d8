use super::MetricsError;

/// 100 × (new − base) / base.
pub fn relative_change(new: f64, base: f64) -> Result<f64, MetricsError> {
    if !(base > 0.0) || !new.is_finite() || !base.is_finite() {
        return Err(MetricsError::NonPositiveBase(base));
    }
    Ok(100.0 * (new - base) / base)
}

/// Signed percentage with two decimals and at least two integer digits,
/// the way result tables print improvements: `+03.45%`, `-10.74%`.
pub fn format_delta(percent: f64) -> String {
    let text = format!("{percent:+06.2}");
    if text.trim_start_matches(['+', '-']) == "00.00" {
        return "+00.00%".to_string();
    }
    format!("{text}%")
}

pub fn relative_delta(new: f64, base: f64) -> Result<String, MetricsError> {
    relative_change(new, base).map(format_delta)
}
