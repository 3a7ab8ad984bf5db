use crate::error::{Error, Result};

/// Quantizes nonnegative real shares to integers summing exactly to `total`.
///
/// Floors first, then hands the leftover units to the largest fractional parts,
/// lower index first on ties. Shares that sum slightly above `total` (rounding
/// noise) give units back from the smallest fractional parts.
pub fn largest_remainder(shares: &[f64], total: u64) -> Vec<u64> {
    let mut out: Vec<u64> = shares.iter().map(|&s| s.max(0.0).floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    if shares.is_empty() {
        return out;
    }
    let mut order: Vec<usize> = (0..shares.len()).collect();
    let frac = |i: usize| shares[i].max(0.0) - shares[i].max(0.0).floor();
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    if assigned <= total {
        let mut left = total - assigned;
        // More than one pass only happens when the shares undershoot badly.
        while left > 0 {
            for &i in &order {
                if left == 0 {
                    break;
                }
                out[i] += 1;
                left -= 1;
            }
        }
    } else {
        let mut excess = assigned - total;
        while excess > 0 {
            for &i in order.iter().rev() {
                if excess == 0 {
                    break;
                }
                if out[i] > 0 {
                    out[i] -= 1;
                    excess -= 1;
                }
            }
        }
    }
    out
}

/// Rounds a point on the scaled simplex to an integer assignment summing to `total`.
pub fn round_to_integers(point: &[f64], total: u64) -> Result<Vec<u64>> {
    if let Some(i) = point.iter().position(|&x| !(0.0..).contains(&x) || !x.is_finite()) {
        return Err(Error::Contract(format!(
            "cannot round entry {i} = {}",
            point[i]
        )));
    }
    let sum: f64 = point.iter().sum();
    let n = total as f64;
    if (sum - n).abs() > 1e-6 * n.max(1.0) {
        return Err(Error::Contract(format!(
            "point sums to {sum}, expected {total}"
        )));
    }
    Ok(largest_remainder(point, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_pass_through() {
        assert_eq!(round_to_integers(&[3.0, 0.0, 2.0], 5).unwrap(), vec![3, 0, 2]);
    }

    #[test]
    fn hand_example() {
        assert_eq!(round_to_integers(&[1.6, 1.6, 0.8], 4).unwrap(), vec![2, 1, 1]);
    }

    #[test]
    fn rejects_negative_and_off_budget() {
        assert!(round_to_integers(&[-0.5, 1.5], 1).is_err());
        assert!(round_to_integers(&[0.5, 1.5], 3).is_err());
    }

    #[test]
    fn uniform_shares_favor_low_indices() {
        assert_eq!(largest_remainder(&[4.0 / 3.0; 3], 4), vec![2, 1, 1]);
        assert_eq!(largest_remainder(&[0.0; 3], 2), vec![1, 1, 0]);
    }

    #[test]
    fn overshoot_is_trimmed() {
        let out = largest_remainder(&[2.0, 1.0000001, 1.0], 3);
        assert_eq!(out.iter().sum::<u64>(), 3);
    }
}
