//! Staircase state-preparation layout for an MPS and a closed-form gate-cost model.
//!
//! Each core becomes one unitary block on `ceil(log2 chi_core) + 1`
//! contiguous qubits, where `chi_core` is the larger bond touching the core.
//! Block `k` starts at qubit `k`, shifted down when it would run past the
//! end of the register, so the blocks overlap on the qubits that carry
//! the bond between neighbouring cores.
//!
//! Cost per `m`-qubit block: no CNOTs for `m = 1`, the exact 3 for `m = 2`,
//! and the quantum-Shannon-decomposition count `3/4 (4^m - 2^m)` for `m >= 3`.
//! Every CNOT is charged one layer plus three single-qubit layers, and each
//! block adds three single-qubit layers of its own. Blocks share qubits with
//! their neighbours, so total depth is the serial sum over blocks.

use serde::{Deserialize, Serialize};

use crate::mps::MpsVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub core: usize,
    /// First qubit acted on.
    pub start: usize,
    /// Number of contiguous qubits.
    pub width: usize,
}

impl Block {
    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitCost {
    pub n_qubits: usize,
    pub per_core_qubits: Vec<usize>,
    pub two_qubit_gates: u64,
    pub depth: u64,
}

/// `ceil(log2 chi) + 1`.
pub fn block_width(chi: usize) -> usize {
    chi.max(1).next_power_of_two().trailing_zeros() as usize + 1
}

/// Layout for internal bonds `bonds` (length `n - 1`).
pub fn layout_from_bonds(bonds: &[usize]) -> Vec<Block> {
    let n = bonds.len() + 1;
    (0..n)
        .map(|k| {
            let left = if k == 0 { 1 } else { bonds[k - 1] };
            let right = if k + 1 == n { 1 } else { bonds[k] };
            let width = block_width(left.max(right)).min(n);
            Block { core: k, start: k.min(n - width), width }
        })
        .collect()
}

/// Bonds of an `n`-qubit MPS with every bond as large as `chi` allows.
pub fn saturated_bonds(n: usize, chi: usize) -> Vec<usize> {
    (1..n).map(|k| chi.min(1 << k.min(n - k))).collect()
}

pub fn staircase_layout(m: &MpsVector) -> Vec<Block> {
    layout_from_bonds(&m.bonds())
}

pub fn cnot_count(width: usize) -> u64 {
    match width {
        0 | 1 => 0,
        2 => 3,
        m => {
            let four = 1u64 << (2 * m);
            let two = 1u64 << m;
            // 4^m - 2^m is divisible by 4 for m >= 2, so this is exact.
            3 * (four - two) / 4
        }
    }
}

pub fn block_depth(width: usize) -> u64 {
    4 * cnot_count(width) + 3
}

pub fn cost_model(layout: &[Block]) -> CircuitCost {
    let n_qubits = layout.iter().map(|b| b.start + b.width).max().unwrap_or(0);
    CircuitCost {
        n_qubits,
        per_core_qubits: layout.iter().map(|b| b.width).collect(),
        two_qubit_gates: layout.iter().map(|b| cnot_count(b.width)).sum(),
        depth: layout.iter().map(|b| block_depth(b.width)).sum(),
    }
}

/// Layout and cost of the preparation circuit for one MPS.
pub fn circuit_cost(m: &MpsVector) -> CircuitCost {
    cost_model(&staircase_layout(m))
}
