use crate::error::{Error, Result};

use super::{MilpModel, Sense, Tag, VarId};

/// Constrain `y = x · p` for binary `x` and `p ∈ [0, p_ub]`:
///
/// ```text
/// y <= p_ub x,   y <= p,   y >= p - p_ub (1 - x),   y >= 0
/// ```
pub fn linearize_binary_product(
    model: &mut MilpModel,
    x: VarId,
    p: VarId,
    y: VarId,
    tag: Tag,
) -> Result<()> {
    if !model.vars[x].binary {
        return Err(Error::Model(format!("product factor v{x} is not binary")));
    }
    let (p_lb, p_ub) = (model.vars[p].lb, model.vars[p].ub);
    if !p_ub.is_finite() {
        return Err(Error::Model(format!("product factor v{p} has no finite upper bound")));
    }
    if p_lb < 0.0 {
        return Err(Error::Model(format!("product factor v{p} may be negative")));
    }
    model.add_constraint(&[(y, 1.0), (x, -p_ub)], Sense::Le, 0.0, tag);
    model.add_constraint(&[(y, 1.0), (p, -1.0)], Sense::Le, 0.0, tag);
    model.add_constraint(&[(y, 1.0), (p, -1.0), (x, -p_ub)], Sense::Ge, -p_ub, tag);
    let v = &mut model.vars[y];
    v.lb = v.lb.max(0.0);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::VarKey;

    fn block(p_ub: f64) -> (MilpModel, VarId, VarId, VarId) {
        let mut m = MilpModel::new();
        let x = m.add_binary(VarKey::Named("x".into()));
        let p = m.add_var(VarKey::Named("p".into()), 0.0, p_ub, false);
        let y = m.add_var(VarKey::Named("y".into()), f64::NEG_INFINITY, f64::INFINITY, false);
        linearize_binary_product(&mut m, x, p, y, Tag::ProductLinearization).unwrap();
        (m, x, p, y)
    }

    /// Interval of `y` left feasible by the four inequalities for fixed x, p.
    fn y_range(m: &MilpModel, xv: f64, pv: f64, y: VarId) -> (f64, f64) {
        let (mut lo, mut hi) = (m.vars[y].lb, m.vars[y].ub);
        for c in &m.constraints {
            let coef_y = c.terms.iter().find(|t| t.0 == y).unwrap().1;
            let mut vals = vec![xv, pv, 0.0];
            vals[y] = 0.0;
            let rest = c.activity(&vals);
            let bound = (c.rhs - rest) / coef_y;
            match (c.sense, coef_y > 0.0) {
                (Sense::Le, true) | (Sense::Ge, false) => hi = hi.min(bound),
                _ => lo = lo.max(bound),
            }
        }
        (lo, hi)
    }

    #[test]
    fn exact_on_grid() {
        let (m, _, _, y) = block(300.0);
        for xv in [0.0, 1.0] {
            for pv in [0.0, 150.0, 300.0] {
                let (lo, hi) = y_range(&m, xv, pv, y);
                assert_eq!(lo, xv * pv, "x={xv} p={pv}");
                assert_eq!(hi, xv * pv, "x={xv} p={pv}");
            }
        }
    }

    #[test]
    fn on_forces_p() {
        let (m, _, _, y) = block(300.0);
        assert_eq!(y_range(&m, 1.0, 285.0, y), (285.0, 285.0));
        assert_eq!(y_range(&m, 0.0, 285.0, y), (0.0, 0.0));
    }

    #[test]
    fn unbounded_factor_rejected() {
        let mut m = MilpModel::new();
        let x = m.add_binary(VarKey::Named("x".into()));
        let p = m.add_var(VarKey::Named("p".into()), 0.0, f64::INFINITY, false);
        let y = m.add_var(VarKey::Named("y".into()), 0.0, f64::INFINITY, false);
        assert!(linearize_binary_product(&mut m, x, p, y, Tag::ProductLinearization).is_err());
    }
}
