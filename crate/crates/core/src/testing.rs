//! Shared proptest strategies.

use proptest::prelude::*;

use crate::paths::ScalarPath;

pub fn arb_scalar_path() -> impl Strategy<Value = ScalarPath> {
    (1usize..15, any::<bool>(), any::<bool>()).prop_flat_map(|(k, linear, lattice)| {
        (
            prop::collection::vec(0.05f64..1.0, k - 1),
            prop::collection::vec(-3.0f64..3.0, k),
            Just(linear),
            Just(lattice),
        )
            .prop_map(|(gaps, vals, linear, lattice)| {
                let mut bps = vec![0.0];
                for g in gaps {
                    let last = *bps.last().unwrap();
                    bps.push(last + g);
                }
                // Lattice values make ties and flat linear segments likely.
                let vals = if lattice { vals.iter().map(|v| v.round()).collect() } else { vals };
                if linear {
                    ScalarPath::linear(bps, vals).unwrap()
                } else {
                    ScalarPath::step(bps, vals).unwrap()
                }
            })
    })
}

