//! Ball/Moran-set sandwich checks in exact rational mode, including the
//! stronger containment at the right-anchored child of the left-packed
//! layout.
//!
//! ```bash
//! cargo run --release -p morandim --example sandwich_verification
//! ```

use morandim::moran::{sandwich_queries, verify_sandwich, MoranTree, PlacementPolicy};
use morandim::randomness::{sample_environment, DistributionSpec};
use morandim::RationalMoranTree;

fn main() {
    // mixed child counts with heavy-tail weights, left-packed placement
    let spec = DistributionSpec::inverse_square_mixture(8, 0.25).unwrap();
    let env = sample_environment(&spec, 21, 7).unwrap();
    let tree: RationalMoranTree =
        MoranTree::build(&env, 0.25, PlacementPolicy::LeftPackedRightAnchored, 7).unwrap();
    println!(
        "tree: depth {} nodes {} L {}",
        tree.depth(),
        tree.node_count(),
        tree.gap_l()
    );

    tree.verify_separation(0.25).unwrap();
    tree.verify_stronger_separation(0.25).unwrap();
    println!("pairwise and stronger separation verified exactly");

    let queries = sandwich_queries(&tree, 60, 77);
    let report = verify_sandwich(&tree, &queries).unwrap();
    println!(
        "sandwich queries: {}/{} passed",
        report.passes(),
        report.outcomes.len()
    );
    assert!(report.all_pass());

    // radii outside the admissible range are rejected per query
    let bad = vec![(
        morandim::moran::Coord::zero(),
        morandim::moran::Coord::one(),
    )];
    let report = verify_sandwich(&tree, &bad).unwrap();
    println!("out-of-range radius -> {:?}", report.outcomes[0]);
}
