use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::grid::Grid;

/// Binary relay activation `eps[l, b]` (relay `l` forwards in slot `b`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionMatrix {
    eps: Grid<bool>,
}

impl SelectionMatrix {
    pub fn none(relays: usize, slots: usize) -> Self {
        SelectionMatrix { eps: Grid::filled(relays, slots, false) }
    }

    pub fn all(relays: usize, slots: usize) -> Self {
        SelectionMatrix { eps: Grid::filled(relays, slots, true) }
    }

    pub fn from_grid(eps: Grid<bool>) -> Self {
        SelectionMatrix { eps }
    }

    pub fn from_fn(relays: usize, slots: usize, f: impl FnMut(usize, usize) -> bool) -> Self {
        SelectionMatrix { eps: Grid::from_fn(relays, slots, f) }
    }

    /// Decodes an integer whose bit `l * slots + b` is `eps[l, b]`.
    pub fn from_encoding(code: u64, relays: usize, slots: usize) -> Self {
        Self::from_fn(relays, slots, |l, b| (code >> (l * slots + b)) & 1 == 1)
    }

    pub fn encoding(&self) -> u64 {
        self.eps.indexed().filter(|(_, &e)| e).map(|((l, b), _)| 1u64 << (l * self.slots() + b)).sum()
    }

    pub fn relays(&self) -> usize {
        self.eps.rows()
    }

    pub fn slots(&self) -> usize {
        self.eps.cols()
    }

    pub fn get(&self, l: usize, b: usize) -> bool {
        self.eps[(l, b)]
    }

    pub fn set(&mut self, l: usize, b: usize, on: bool) {
        self.eps[(l, b)] = on;
    }

    pub fn as_grid(&self) -> &Grid<bool> {
        &self.eps
    }

    /// Indices of the relays selected in slot `b`.
    pub fn selected(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.relays()).filter(move |&l| self.eps[(l, b)])
    }

    pub fn count(&self) -> usize {
        self.eps.iter().filter(|&&e| e).count()
    }

    pub fn slot_is_silent(&self, b: usize) -> bool {
        self.selected(b).next().is_none()
    }

    pub fn any_silent_slot(&self) -> bool {
        (0..self.slots()).any(|b| self.slot_is_silent(b))
    }
}

impl fmt::Display for SelectionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in 0..self.relays() {
            if l > 0 {
                f.write_str("/")?;
            }
            for b in 0..self.slots() {
                f.write_str(if self.get(l, b) { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

/// Power-splitting ratios and relay transmit powers, both `L x B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousDecision {
    pub beta: Grid<f64>,
    pub p_r: Grid<f64>,
}

impl ContinuousDecision {
    pub fn new(beta: Grid<f64>, p_r: Grid<f64>) -> Result<Self, ModelError> {
        if beta.shape() != p_r.shape() {
            return Err(ModelError::Shape { what: "p_r", expected: beta.shape(), got: p_r.shape() });
        }
        Ok(ContinuousDecision { beta, p_r })
    }

    pub fn zeros(relays: usize, slots: usize) -> Self {
        ContinuousDecision { beta: Grid::filled(relays, slots, 0.0), p_r: Grid::filled(relays, slots, 0.0) }
    }

    pub fn uniform(relays: usize, slots: usize, beta: f64, p_r: f64) -> Self {
        ContinuousDecision { beta: Grid::filled(relays, slots, beta), p_r: Grid::filled(relays, slots, p_r) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.beta.shape()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_round_trip() {
        for code in 0..64u64 {
            let m = SelectionMatrix::from_encoding(code, 2, 3);
            assert_eq!(m.encoding(), code);
        }
        let m = SelectionMatrix::from_encoding(0b100_001, 2, 3);
        assert!(m.get(0, 0) && m.get(1, 2));
        assert_eq!(m.count(), 2);
        assert_eq!(m.to_string(), "100/001");
    }

    #[test]
    fn silent_slots() {
        let m = SelectionMatrix::from_encoding(0b01, 1, 2);
        assert!(!m.slot_is_silent(0));
        assert!(m.slot_is_silent(1));
        assert!(m.any_silent_slot());
        assert_eq!(m.selected(0).collect::<Vec<_>>(), vec![0]);
    }
}
