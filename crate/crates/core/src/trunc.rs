//! Finite truncations of a population model.
//!
//! A truncation holds an explored window `W` and its frontier
//! `W̄ = post(W) \ W`. Explored rows carry the model rates; frontier rows are
//! empty, so frontier states are absorbing and all their labels are unknown.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::csl::{ApExpr, StateFormula};
use crate::mpm::{ModelSpec, State};
use crate::sparse::Csr;
use crate::ternary::Ternary;
use crate::Error;

#[derive(Clone, Debug, Default)]
pub struct Truncation {
    states: Vec<State>,
    index: HashMap<State, usize>,
    explored: Vec<bool>,
    rows: Vec<Vec<(usize, f64)>>,
    n_explored: usize,
    order: Vec<usize>,
    aps: Vec<ApExpr>,
    labels: Vec<Vec<Ternary>>,
}

impl Truncation {
    pub fn new() -> Truncation {
        Truncation::default()
    }

    /// An explicit finite chain over states `[0], [1], …` given by its
    /// rate rows. States with an empty row are explored and absorbing.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Truncation {
        let n = rows.len();
        let states: Vec<State> = (0..n as i64).map(|i| vec![i]).collect();
        let index = states.iter().cloned().zip(0..n).collect();
        Truncation {
            states,
            index,
            explored: vec![true; n],
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().filter(|e| e.1 > 0.0).collect())
                .collect(),
            n_explored: n,
            order: (0..n).collect(),
            aps: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Number of states in `W ∪ W̄`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of explored states `|W|`.
    pub fn explored_len(&self) -> usize {
        self.n_explored
    }

    /// Explored state indices in the order they were explored.
    pub fn exploration_order(&self) -> &[usize] {
        &self.order
    }

    pub fn frontier_len(&self) -> usize {
        self.states.len() - self.n_explored
    }

    pub fn state(&self, i: usize) -> &[i64] {
        &self.states[i]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn is_explored(&self, i: usize) -> bool {
        self.explored[i]
    }

    /// Frontier state indices in index order.
    pub fn frontier(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.explored[i])
    }

    pub fn explored(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.explored[i])
    }

    /// Successors of state `i` with their rates; empty for frontier states.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|e| e.1).sum()
    }

    fn intern(&mut self, x: State) -> usize {
        if let Some(&i) = self.index.get(&x) {
            return i;
        }
        let i = self.states.len();
        self.index.insert(x.clone(), i);
        self.states.push(x);
        self.explored.push(false);
        self.rows.push(Vec::new());
        for t in &mut self.labels {
            t.push(Ternary::Unknown);
        }
        i
    }

    /// Moves the given states into `W`, computing their rows and labels.
    /// States already explored are ignored; unseen states are added.
    pub fn extend<I>(&mut self, spec: &ModelSpec, states: I) -> Result<(), Error>
    where
        I: IntoIterator<Item = State>,
    {
        for x in states {
            let i = self.intern(x);
            if self.explored[i] {
                continue;
            }
            let succ = spec.successors(&self.states[i])?;
            let mut row = Vec::with_capacity(succ.len());
            for (y, r) in succ {
                let j = self.intern(y);
                row.push((j, r));
            }
            self.rows[i] = row;
            self.explored[i] = true;
            self.n_explored += 1;
            self.order.push(i);
            for (k, ap) in self.aps.iter().enumerate() {
                self.labels[k][i] = Ternary::from(ap.eval(&self.states[i]));
            }
        }
        Ok(())
    }

    /// Explores the frontier states at the given indices.
    pub fn extend_indices(&mut self, spec: &ModelSpec, idx: &[usize]) -> Result<(), Error> {
        let states: Vec<State> = idx.iter().map(|&i| self.states[i].clone()).collect();
        self.extend(spec, states)
    }

    /// Registers an atomic proposition for labelling; returns its slot.
    pub fn register_ap(&mut self, ap: &ApExpr) -> usize {
        if let Some(k) = self.aps.iter().position(|a| a == ap) {
            return k;
        }
        let column = (0..self.len())
            .map(|i| {
                if self.explored[i] {
                    Ternary::from(ap.eval(&self.states[i]))
                } else {
                    Ternary::Unknown
                }
            })
            .collect();
        self.aps.push(ap.clone());
        self.labels.push(column);
        self.aps.len() - 1
    }

    /// Label of state `i` for a registered proposition.
    pub fn label(&self, i: usize, slot: usize) -> Ternary {
        self.labels[slot][i]
    }

    /// Label of state `i` for any proposition.
    pub fn label_of(&self, i: usize, ap: &ApExpr) -> Ternary {
        if let Some(k) = self.aps.iter().position(|a| a == ap) {
            return self.labels[k][i];
        }
        if self.explored[i] {
            Ternary::from(ap.eval(&self.states[i]))
        } else {
            Ternary::Unknown
        }
    }

    /// Local value of a formula at state `i` from labels only; nested
    /// probabilistic operators are unknown.
    pub fn eval_local(&self, i: usize, f: &StateFormula) -> Ternary {
        match f {
            StateFormula::Const(b) => Ternary::from(*b),
            StateFormula::Atomic(ap) => self.label_of(i, ap),
            StateFormula::Not(g) => self.eval_local(i, g).complement(),
            StateFormula::And(a, b) => self.eval_local(i, a).and(self.eval_local(i, b)),
            StateFormula::Prob { .. } | StateFormula::Steady { .. } => Ternary::Unknown,
        }
    }

    pub fn csr(&self) -> Csr {
        Csr::from_rows(self.len(), self.rows.iter().map(|r| r.as_slice()))
    }

    /// View of the truncation with the given states made absorbing.
    pub fn make_absorbing(&self, absorbed: &[bool]) -> AbsorbingView<'_> {
        debug_assert_eq!(absorbed.len(), self.len());
        AbsorbingView {
            base: self,
            absorbed: absorbed.to_vec(),
        }
    }

    /// View with only the frontier absorbing.
    pub fn view(&self) -> AbsorbingView<'_> {
        AbsorbingView {
            base: self,
            absorbed: vec![false; self.len()],
        }
    }

    /// Minimal number of transitions from `s0` to any frontier state, or
    /// `None` when the frontier is unreachable or empty.
    pub fn depth(&self, s0: &[i64]) -> Result<Option<usize>, Error> {
        let start = self
            .index_of(s0)
            .filter(|&i| self.explored[i])
            .ok_or_else(|| Error::StateNotExplored(s0.to_vec()))?;
        let mut dist = vec![usize::MAX; self.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            if !self.explored[i] {
                return Ok(Some(dist[i]));
            }
            for &(j, _) in &self.rows[i] {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        Ok(None)
    }

    /// Debug dump: `x1 ... xd ; exit_rate ; labels` per state.
    pub fn dump(&self, out: &mut impl core::fmt::Write) -> core::fmt::Result {
        for i in 0..self.len() {
            for (k, v) in self.states[i].iter().enumerate() {
                if k > 0 {
                    out.write_char(' ')?;
                }
                write!(out, "{v}")?;
            }
            write!(out, " ; {} ;", self.exit_rate(i))?;
            for t in &self.labels {
                write!(out, " {}", t[i])?;
            }
            out.write_char('\n')?;
        }
        Ok(())
    }
}

/// A truncation with an additional set of absorbing states.
#[derive(Clone, Debug)]
pub struct AbsorbingView<'a> {
    base: &'a Truncation,
    absorbed: Vec<bool>,
}

impl<'a> AbsorbingView<'a> {
    pub fn base(&self) -> &'a Truncation {
        self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.absorbed[i] || self.base.rows[i].is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [(usize, f64)] {
        if self.absorbed[i] {
            &[]
        } else {
            &self.base.rows[i]
        }
    }

    pub fn csr(&self) -> Csr {
        Csr::from_rows(self.len(), (0..self.len()).map(|i| self.row(i)))
    }
}
