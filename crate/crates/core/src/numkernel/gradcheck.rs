use indexmap::IndexMap;

use super::{Graph, ParamSet, Var};
use crate::error::Result;

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `name[flat_index]` of the worst element.
    pub worst: String,
    pub checked: usize,
}

/// `|a - n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Checks every element of every parameter in 64-bit arithmetic.
///
/// `computation` builds a scalar from the bound parameters; it is re-run
/// twice per element with the element shifted by `±eps`.
pub fn grad_check<C>(params: &ParamSet<f64>, eps: f64, computation: C) -> Result<GradCheckReport>
where
    C: Fn(&mut Graph<f64>, &IndexMap<String, Var>) -> Result<Var>,
{
    let eval = |p: &ParamSet<f64>| -> Result<(Graph<f64>, IndexMap<String, Var>, Var)> {
        let mut g = Graph::new();
        let vars = p
            .iter()
            .map(|(k, t)| (k.clone(), g.param(t.clone())))
            .collect::<IndexMap<_, _>>();
        let out = computation(&mut g, &vars)?;
        Ok((g, vars, out))
    };

    let (g, vars, out) = eval(params)?;
    let grads = g.backward(out)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    let mut probe = params.clone();
    for (name, var) in &vars {
        let n = params[name].len();
        for i in 0..n {
            let analytic = grads.get(*var).map_or(0.0, |t| t.data()[i]);
            let orig = params[name].data()[i];
            probe[name].data_mut()[i] = orig + eps;
            let (gp, _, op) = eval(&probe)?;
            let plus = gp.value(op).data()[0];
            probe[name].data_mut()[i] = orig - eps;
            let (gm, _, om) = eval(&probe)?;
            let minus = gm.value(om).data()[0];
            probe[name].data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_empty() {
                report.max_rel_error = err;
                report.worst = format!("{name}[{i}]");
            }
        }
    }
    Ok(report)
}
