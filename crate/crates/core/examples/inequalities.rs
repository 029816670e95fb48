//! Prints the inequality sweep and a few special-function values.

use tdaco::bounds::{
    bounds_sweep, hard_recurrence_with, lambert_w, log_integral, nasty_sum_check, GammaForm, WBranch,
};
use tdaco::quadrature::QuadratureSpec;

fn main() -> tdaco::Result<()> {
    let spec = QuadratureSpec::default();
    for x in [3.0, 10.0, 100.0, 1e4] {
        println!("li({x}) = {:.10}", log_integral(x, &spec)?);
    }
    println!("W0(1) = {:.15}", lambert_w(WBranch::Principal, 1.0)?);
    println!("W-1(-0.2) = {:.15}", lambert_w(WBranch::Lower, -0.2)?);

    for b in [0.2, 0.8] {
        for form in [GammaForm::Proof, GammaForm::Statement] {
            let t = hard_recurrence_with(b, 1.0, 1000, form)?;
            println!(
                "b={b} {form:?}: min M_k/bound = {:.4}, first violation {:?}",
                t.min_ratio(),
                t.first_violation(1e-12)
            );
        }
    }

    let s = nasty_sum_check(0.5, 3, 5000)?;
    println!("sum exp(-li(m+3)/2) = {:.6e} <= {:.6e} (ratio {:.3})", s.partial_sum, s.integral_bound, s.ratio);

    let rows = bounds_sweep()?;
    let mut by_check: Vec<(&str, usize, usize)> = Vec::new();
    for r in &rows {
        match by_check.iter_mut().find(|(c, _, _)| *c == r.check) {
            Some(e) => {
                e.1 += 1;
                e.2 += r.pass as usize;
            }
            None => by_check.push((r.check, 1, r.pass as usize)),
        }
    }
    for (check, total, passed) in by_check {
        println!("{check:<32} {passed}/{total}");
    }
    Ok(())
}
