//! The middle-third construction as an embedded Moran tree: locating
//! points, ball-measure bounds, and the flat-record export.
//!
//! ```bash
//! cargo run --release -p morandim --example cantor_tree
//! ```

use morandim::moran::{ball_measure_bounds, MoranTree, PlacementPolicy};
use morandim::randomness::{sample_environment, DistributionSpec, LevelDraw};
use morandim::FloatMoranTree;

fn main() {
    let spec = DistributionSpec::point_mass(
        LevelDraw::new(2, 1.0 / 3.0, vec![0.5, 0.5]).unwrap(),
        1.0 / 3.0,
    )
    .unwrap();
    let env = sample_environment(&spec, 1, 8).unwrap();
    let tree: FloatMoranTree =
        MoranTree::build(&env, 1.0 / 3.0, PlacementPolicy::EquallySpaced, 5).unwrap();

    println!(
        "depth {} tree, {} nodes, L = {}",
        tree.depth(),
        tree.node_count(),
        tree.gap_l()
    );

    let id = tree.locate(&0.0, 3).unwrap();
    println!("x = 0 at level 3 -> path {:?}", tree.path(id));
    match tree.locate(&0.5, 1) {
        Err(e) => println!("x = 1/2 at level 1 -> {e}"),
        Ok(_) => unreachable!("1/2 sits in the removed middle third"),
    }

    for radius in [1.0, 1.0 / 3.0, 1.0 / 9.0 + 1e-6] {
        let b = ball_measure_bounds(&tree, &0.0, &radius).unwrap();
        println!(
            "ball(0, {radius:.7}): measure in [{:.6}, {:.6}]{}",
            b.log_lower.map(f64::exp).unwrap_or(0.0),
            b.log_upper.map(f64::exp).unwrap_or(0.0),
            if b.degenerate { " (degenerate radius)" } else { "" }
        );
    }

    println!("\nfirst records of the depth-first export:");
    let mut buf = Vec::new();
    tree.export_records(&mut buf).unwrap();
    for line in String::from_utf8(buf).unwrap().lines().take(8) {
        println!("  {line}");
    }
}
