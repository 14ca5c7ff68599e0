use crate::classify::POSTERIOR_FLOOR;
use crate::error::{Error, Result};
use crate::label::SubscriptionLabel;

/// Negative natural-log posteriors `(D(prepaid), D(postpaid))`.
pub fn data_cost(posterior: (f64, f64)) -> Result<[f64; 2]> {
    let ok = |p: f64| (POSTERIOR_FLOOR..=1.0 - POSTERIOR_FLOOR).contains(&p);
    for p in [posterior.0, posterior.1] {
        if !ok(p) {
            return Err(Error::PosteriorOutOfRange(p));
        }
    }
    Ok([-libm::log(posterior.0), -libm::log(posterior.1)])
}

/// Disagreement cost of a directed social edge `(u, v)`: zero for equal
/// labels, otherwise the reciprocal out-degree of the postpaid endpoint.
pub fn smoothness_cost(f_u: SubscriptionLabel, f_v: SubscriptionLabel, k_out_u: u32, k_out_v: u32) -> Result<f64> {
    use SubscriptionLabel::*;
    let k = match (f_u, f_v) {
        (Prepaid, Prepaid) | (Postpaid, Postpaid) => return Ok(0.0),
        (Prepaid, Postpaid) => k_out_v,
        (Postpaid, Prepaid) => k_out_u,
    };
    if k == 0 {
        return Err(Error::ZeroOutDegree);
    }
    Ok(1.0 / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use SubscriptionLabel::*;

    #[test]
    fn even_posterior_costs_ln2() {
        let [d0, d1] = data_cost((0.5, 0.5)).unwrap();
        assert_eq!(d0, core::f64::consts::LN_2);
        assert_eq!(d1, core::f64::consts::LN_2);
    }

    #[test]
    fn clamp_boundary_costs() {
        let [d0, d1] = data_cost((1e-10, 1.0 - 1e-10)).unwrap();
        assert!((d0 - 23.025_850_929_940_457).abs() < 1e-12);
        assert!((d1 - 1e-10).abs() < 1e-15);
        let [e0, e1] = data_cost((1.0 - 1e-10, 1e-10)).unwrap();
        assert_eq!((e0, e1), (d1, d0));
    }

    #[test]
    fn unclamped_posteriors_are_rejected() {
        assert_eq!(data_cost((0.0, 1.0)), Err(Error::PosteriorOutOfRange(0.0)));
        assert!(data_cost((0.5, 1.0)).is_err());
    }

    #[test]
    fn smoothness_values() {
        assert_eq!(smoothness_cost(Prepaid, Prepaid, 0, 0), Ok(0.0));
        assert_eq!(smoothness_cost(Postpaid, Postpaid, 3, 0), Ok(0.0));
        assert_eq!(smoothness_cost(Prepaid, Postpaid, 9, 4), Ok(0.25));
        assert_eq!(smoothness_cost(Postpaid, Prepaid, 5, 9), Ok(0.2));
        assert_eq!(smoothness_cost(Prepaid, Postpaid, 5, 0), Err(Error::ZeroOutDegree));
    }

    #[test]
    fn pairwise_term_is_submodular() {
        for ku in 1..6 {
            for kv in 1..6 {
                let w01 = smoothness_cost(Prepaid, Postpaid, ku, kv).unwrap();
                let w10 = smoothness_cost(Postpaid, Prepaid, ku, kv).unwrap();
                assert!(w01 + w10 >= 0.0);
            }
        }
    }
}
