//! One regularized weight vector, solved in closed form and checked
//! against the objective it minimizes.

use nalgebra::{DMatrix, DVector};
use spectral_transfer::gctpls::{self, SolveStrategy};
use spectral_transfer::graphreg::{self, StandardsPair};

fn main() -> spectral_transfer::Result<()> {
    // Four centered samples on five channels.
    let x = DMatrix::from_row_slice(
        4,
        5,
        &[
            1.0, 0.5, 0.0, -0.2, 0.1, -0.4, 0.2, 0.3, 0.1, -0.3, 0.2, -0.6, 0.1, 0.4, 0.0, -0.8,
            -0.1, -0.4, -0.3, 0.2,
        ],
    );
    let y = DVector::from_vec(vec![1.2, -0.3, 0.4, -1.3]);

    // One standard whose second-instrument reading is offset on channel 0.
    let primary = DMatrix::from_row_slice(1, 5, &[0.5, 0.5, 0.5, 0.5, 0.5]);
    let mut secondary = primary.clone();
    secondary[(0, 0)] += 0.3;
    let reg = graphreg::regularizer(&StandardsPair::new(primary, secondary)?);

    for gamma in [0.0, 1.0, 1e3, 1e6] {
        let w = gctpls::solve_weights(&x, &y, &reg, gamma)?;
        let (value, grad) = gctpls::objective_and_gradient(&w, &x, &y, &reg, gamma)?;
        println!(
            "gamma {gamma:>9}: w[0] = {:+.6}  objective {value:.6}  |grad| {:.1e}",
            w[0],
            grad.norm()
        );
    }

    let dense = gctpls::solve_weights_with(&x, &y, &reg, 1e3, SolveStrategy::Dense)?;
    let woodbury = gctpls::solve_weights_with(&x, &y, &reg, 1e3, SolveStrategy::Woodbury)?;
    println!(
        "dense vs low-rank update: {:.1e}",
        (dense - woodbury).norm()
    );
    Ok(())
}
