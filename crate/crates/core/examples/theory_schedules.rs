//! The clipping radii and step sizes behind each error bound, evaluated for
//! one setting, next to the bound values.

use robust_td::td::{bounds, u_bound, ClipSchedule, StepSchedule};

fn main() {
    let (rho, gamma, p, u0, horizon, delta) = (30.0, 0.9, 0.35, 10.0, 100_000usize, 0.1);
    let u = u_bound(u0, rho, p);
    println!("u0 = {u0}, ρ = {rho}, p = {p} -> u = {u:.3}");

    let clips = [
        ("moment growth", ClipSchedule::MomentGrowth { u, p }),
        ("linear", ClipSchedule::Linear),
        ("high probability", ClipSchedule::HighProbability { u, p, delta }),
        ("fixed horizon", ClipSchedule::FixedHorizon { u, p, horizon, delta }),
    ];
    println!("\n{:<18} {:>12} {:>12} {:>12}", "b_t", "t=1", "t=1e3", "t=1e5");
    for (name, c) in clips {
        println!("{name:<18} {:>12.4} {:>12.4} {:>12.4}", c.radius(1), c.radius(1000), c.radius(100_000));
    }

    let steps = [
        ("expected iid", StepSchedule::ExpectedIid { rho, gamma, u, p, horizon }),
        ("diminishing", StepSchedule::Diminishing { gamma, lambda_min: 0.05 }),
        ("markovian", StepSchedule::Markovian { rho, u, p, horizon }),
        ("high probability", StepSchedule::high_probability(rho, gamma, u, p, horizon, delta)),
    ];
    println!("\n{:<18} {:>12} {:>12}", "η_t", "t=1", "t=1e5");
    for (name, s) in steps {
        println!("{name:<18} {:>12.4e} {:>12.4e}", s.step(1), s.step(100_000));
    }

    let log_term = (4.0f64 / delta).ln();
    println!("\nbounds at T = {horizon}:");
    println!("  expected, iid      {:.4e}", bounds::expected_iid(rho, u, p, gamma, horizon));
    println!("  high probability   {:.4e}", bounds::high_probability(rho, u, p, gamma, horizon, log_term));
    println!("  markovian (τ = 20) {:.4e}", bounds::markovian(rho, u, p, gamma, horizon, 20));
}
