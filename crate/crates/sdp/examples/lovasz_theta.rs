//! The Lovasz theta function of the n-cycle,
//!
//! ```text
//! theta(C_n) = max <J, X>  s.t.  tr X = 1,  X_ij = 0 on edges,  X psd,
//! ```
//!
//! has the closed form `n cos(pi/n) / (1 + cos(pi/n))` for odd n and
//! `n / 2` for even n. For the pentagon this is `sqrt(5)`.

use pep_sdp::{solve, Block, LinearForm, SolveOptions, StandardSdp};

fn theta_cycle(n: usize) -> StandardSdp {
    let mut sdp = StandardSdp::new(vec![Block::Psd(n)]);
    // off-diagonal entries count for both (i, j) and (j, i)
    for i in 0..n {
        for j in i..n {
            sdp.objective.push(0, i, j, -1.0);
        }
    }
    let mut trace = LinearForm::default();
    for i in 0..n {
        trace.push(0, i, i, 1.0);
    }
    sdp.add_equality(trace, 1.0);
    for i in 0..n {
        let mut edge = LinearForm::default();
        edge.push(0, i, (i + 1) % n, 0.5);
        sdp.add_equality(edge, 0.0);
    }
    sdp
}

fn closed_form(n: usize) -> f64 {
    if n % 2 == 0 {
        n as f64 / 2.0
    } else {
        let c = (std::f64::consts::PI / n as f64).cos();
        n as f64 * c / (1.0 + c)
    }
}

fn main() -> Result<(), pep_sdp::SdpError> {
    println!(
        "{:>3} {:>14} {:>14} {:>10} {:>5}",
        "n", "theta", "closed form", "kkt", "iter"
    );
    for n in 4..=11 {
        let sol = solve(&theta_cycle(n), &SolveOptions::default())?;
        println!(
            "{n:>3} {:>14.10} {:>14.10} {:>10.2e} {:>5}",
            -sol.primal_objective,
            closed_form(n),
            sol.max_kkt_residual(),
            sol.iterations
        );
    }
    Ok(())
}
