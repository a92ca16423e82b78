//! The matched-pairs graph over the standards and the penalty it induces.

use nalgebra::{DMatrix, DVector};
use spectral_transfer::graphreg::{self, StandardsPair};

fn main() -> spectral_transfer::Result<()> {
    let graph = graphreg::build_graph(2)?;
    println!("adjacency{:.0}", graph.adjacency);
    let eig: Vec<String> = graph
        .laplacian
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|v| format!("{:.3}", v.abs()))
        .collect();
    println!("laplacian eigenvalues: {}", eig.join(" "));

    let primary = DMatrix::from_row_slice(2, 3, &[1.0, 0.2, 0.0, 0.5, 0.9, 0.1]);
    let secondary = DMatrix::from_row_slice(2, 3, &[1.1, 0.2, 0.1, 0.6, 0.9, 0.2]);
    let std = StandardsPair::new(primary, secondary)?;

    let factored = graphreg::regularizer(&std);
    let explicit = graphreg::laplacian_form(&std)?;
    println!("Gamma from the difference factor{:.3}", factored.dense());
    println!(
        "max deviation from K'LK: {:.1e}",
        (factored.dense() - explicit).amax()
    );

    // The penalty is the summed squared score gap of each matched pair.
    let w = DVector::from_vec(vec![0.3, -0.5, 1.0]);
    let gaps = (std.primary() - std.secondary()) * &w;
    println!(
        "w'Gamma w = {:.6}, sum of squared gaps = {:.6}",
        graphreg::regularizer_value(&w, &factored)?,
        gaps.norm_squared()
    );
    Ok(())
}
