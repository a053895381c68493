use crate::error::{invalid, Result};

/// CDF of the chi-square distribution with 1 or 2 degrees of freedom, in
/// closed form.
pub fn chi_square_cdf(dof: u32, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return match dof {
            1 | 2 => Ok(0.0),
            _ => Err(invalid("dof", format!("{dof} (only 1 or 2 supported)"))),
        };
    }
    match dof {
        1 => Ok(libm::erf((x / 2.0).sqrt())),
        2 => Ok(-libm::expm1(-x / 2.0)),
        _ => Err(invalid("dof", format!("{dof} (only 1 or 2 supported)"))),
    }
}

/// Probability mass of the Mahalanobis ring `lower ≤ r ≤ upper`, shared
/// equally by `count` trajectories.
pub fn chi_square_ring_weight(dof: u32, lower: f64, upper: f64, count: usize) -> Result<f64> {
    if !(lower >= 0.0 && upper > lower && upper.is_finite()) {
        return Err(invalid(
            "ring",
            format!("need 0 <= lower < upper, got [{lower}, {upper}]"),
        ));
    }
    if count == 0 {
        return Err(invalid("count", "must be positive"));
    }
    let mass = chi_square_cdf(dof, upper * upper)? - chi_square_cdf(dof, lower * lower)?;
    Ok(mass / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lateral_table_entries() {
        assert!((chi_square_ring_weight(1, 0.0, 0.5, 1).unwrap() - 0.3829).abs() < 5e-5);
        let w = chi_square_ring_weight(1, 0.5, 1.5, 2).unwrap();
        assert!((w - 0.2417).abs() < 5e-5);
        assert!((2.0 * w - 0.4835).abs() < 5e-5);
    }

    #[test]
    fn round_table_entries() {
        let w = chi_square_ring_weight(2, 1.5, 2.5, 8).unwrap();
        assert!((w - 0.0351).abs() < 5e-5);
        // 1 − e^{−r²/2} oracle
        let direct = ((-1.5f64 * 1.5 / 2.0).exp() - (-2.5f64 * 2.5 / 2.0).exp()) / 8.0;
        assert!((w - direct).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(chi_square_ring_weight(3, 0.0, 1.0, 1).is_err());
        assert!(chi_square_ring_weight(1, 1.0, 1.0, 1).is_err());
        assert!(chi_square_ring_weight(1, 0.0, 1.0, 0).is_err());
    }
}
