use podr_core::circuit::{
    block_depth, block_width, circuit_cost, cnot_count, cost_model, layout_from_bonds, saturated_bonds,
    staircase_layout, Block,
};
use podr_core::linalg::fit_line;
use podr_core::mps::tt_svd;
use proptest::prelude::*;

/// Widths and depth recomputed from the model's definition, without the layout code.
fn oracle_depth(bonds: &[usize]) -> (Vec<usize>, u64, u64) {
    let n = bonds.len() + 1;
    let mut widths = Vec::new();
    let (mut gates, mut depth) = (0u64, 0u64);
    for k in 0..n {
        let left = if k == 0 { 1 } else { bonds[k - 1] };
        let right = if k == n - 1 { 1 } else { bonds[k] };
        let chi = left.max(right);
        let mut m = 1;
        while (1usize << (m - 1)) < chi {
            m += 1;
        }
        let m = m.min(n);
        let cx = match m {
            1 => 0,
            2 => 3,
            _ => (3 * (4u64.pow(m as u32) - 2u64.pow(m as u32))).div_ceil(4),
        };
        widths.push(m);
        gates += cx;
        depth += 4 * cx + 3;
    }
    (widths, gates, depth)
}

fn bonds_strategy() -> impl Strategy<Value = Vec<usize>> {
    (2usize..14).prop_flat_map(|n| {
        prop::collection::vec(0u32..6, n - 1).prop_map(move |e| {
            (0..n - 1).map(|k| (1usize << e[k]).min(1 << (k + 1).min(n - 1 - k))).collect()
        })
    })
}

#[test]
fn product_state_gives_single_qubit_blocks() {
    let layout = layout_from_bonds(&[1; 5]);
    assert_eq!(layout.len(), 6);
    for (k, b) in layout.iter().enumerate() {
        assert_eq!(*b, Block { core: k, start: k, width: 1 });
    }
    assert_eq!(cost_model(&layout).two_qubit_gates, 0);
}

#[test]
fn bond_two_on_four_qubits_overlaps_by_one() {
    let layout = layout_from_bonds(&[2, 2, 2]);
    assert!(layout.iter().all(|b| b.width == 2));
    for w in layout.windows(2) {
        let shared = w[0].qubits().filter(|q| w[1].qubits().contains(q)).count();
        assert!(shared >= 1, "{w:?}");
    }
    // The last block cannot start past qubit 2 on a 4-qubit register.
    assert_eq!(layout[3].start, 2);
}

#[test]
fn core_chi_sixteen_uses_five_qubits() {
    assert_eq!(block_width(16), 5);
    let layout = layout_from_bonds(&saturated_bonds(12, 16));
    assert_eq!(layout.iter().map(|b| b.width).max(), Some(5));
}

#[test]
fn cnot_counts() {
    assert_eq!(cnot_count(1), 0);
    assert_eq!(cnot_count(2), 3);
    assert_eq!(cnot_count(3), 42);
    assert_eq!(cnot_count(5), 744);
    // The two-qubit override never exceeds the generic formula.
    assert!(cnot_count(2) <= (3 * (16 - 4)) / 4);
}

#[test]
fn fixed_chi_depth_is_affine_in_qubits() {
    let ns = [10usize, 12, 14, 16];
    let depths: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let bonds = saturated_bonds(n, 16);
            let cost = cost_model(&layout_from_bonds(&bonds));
            assert_eq!(cost.depth, oracle_depth(&bonds).2);
            cost.depth as f64
        })
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = fit_line(&x, &depths);
    assert!(fit.r_squared >= 0.999, "r2 = {}", fit.r_squared);
}

#[test]
fn one_more_qubit_adds_one_full_block() {
    for chi in [2usize, 4, 8, 16] {
        for n in 10..16 {
            let d0 = cost_model(&layout_from_bonds(&saturated_bonds(n, chi))).depth;
            let d1 = cost_model(&layout_from_bonds(&saturated_bonds(n + 1, chi))).depth;
            assert_eq!(d1 - d0, block_depth(block_width(chi)), "chi {chi} n {n}");
        }
    }
}

#[test]
fn cost_of_compressed_vector_follows_its_bonds() {
    let x: Vec<f64> = (0..256).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();
    for chi in [1, 2, 4, 8] {
        let m = tt_svd(&x, chi).unwrap();
        assert_eq!(staircase_layout(&m), layout_from_bonds(&m.bonds()));
        let cost = circuit_cost(&m);
        assert_eq!(cost.n_qubits, 8);
        let (widths, gates, depth) = oracle_depth(&m.bonds());
        assert_eq!(cost.per_core_qubits, widths);
        assert_eq!((cost.two_qubit_gates, cost.depth), (gates, depth));
    }
}

proptest! {
    #[test]
    fn model_matches_oracle(bonds in bonds_strategy()) {
        let cost = cost_model(&layout_from_bonds(&bonds));
        let (widths, gates, depth) = oracle_depth(&bonds);
        prop_assert_eq!(cost.per_core_qubits, widths);
        prop_assert_eq!(cost.two_qubit_gates, gates);
        prop_assert_eq!(cost.depth, depth);
    }

    #[test]
    fn blocks_tile_the_register(bonds in bonds_strategy()) {
        let n = bonds.len() + 1;
        let layout = layout_from_bonds(&bonds);
        let chi_max = bonds.iter().copied().max().unwrap_or(1);
        let mut covered = vec![false; n];
        for b in &layout {
            prop_assert!(b.width >= 1 && b.width <= block_width(chi_max));
            prop_assert!(b.start + b.width <= n);
            b.qubits().for_each(|q| covered[q] = true);
        }
        prop_assert!(covered.iter().all(|&c| c));
        for (k, w) in layout.windows(2).enumerate() {
            prop_assert!(w[0].start <= w[1].start);
            if bonds[k] > 1 {
                prop_assert!(w[0].qubits().any(|q| w[1].qubits().contains(&q)), "bond {} blocks {:?}", k, w);
            }
        }
    }

    #[test]
    fn depth_is_monotone_in_every_bond(bonds in bonds_strategy(), pick in any::<prop::sample::Index>()) {
        let n = bonds.len() + 1;
        let k = pick.index(bonds.len());
        let cap = 1usize << (k + 1).min(n - 1 - k);
        let mut raised = bonds.clone();
        raised[k] = (raised[k] * 2).min(cap);
        let d0 = cost_model(&layout_from_bonds(&bonds)).depth;
        let d1 = cost_model(&layout_from_bonds(&raised)).depth;
        prop_assert!(d1 >= d0);
    }

    #[test]
    fn depth_is_monotone_in_qubits(n in 2usize..20, e in 0u32..6) {
        let chi = 1usize << e;
        let d0 = cost_model(&layout_from_bonds(&saturated_bonds(n, chi))).depth;
        let d1 = cost_model(&layout_from_bonds(&saturated_bonds(n + 1, chi))).depth;
        prop_assert!(d1 >= d0);
    }

    #[test]
    fn depth_respects_parallelism_bound(bonds in bonds_strategy()) {
        let cost = cost_model(&layout_from_bonds(&bonds));
        let pairs = (cost.n_qubits / 2).max(1) as u64;
        prop_assert!(cost.depth * pairs >= cost.two_qubit_gates);
    }
}
