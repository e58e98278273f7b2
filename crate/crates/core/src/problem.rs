//! Vehicle routing instances and their penalty QUBO / Ising encodings.
//!
//! Decision variables `x(i,j)` mark the directed edge `i -> j` as used.
//! They are laid out row-major over ordered pairs with the diagonal
//! skipped: `x(0,1), x(0,2), .., x(1,0), x(1,2), .., x(n-1,n-2)`.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Largest variable count accepted by [`brute_force_minimum`].
pub const MAX_BRUTE_FORCE_DIM: usize = 24;

/// Largest node count accepted when building instances.
pub const MAX_NODES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrpInstance {
    n: usize,
    k: usize,
    weights: Vec<Vec<f64>>,
    penalty_a: f64,
}

/// Where the edge weights of a new instance come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    Explicit(Vec<Vec<f64>>),
    /// Independent uniform draws from `[1, 10)` for every ordered pair.
    Seeded(u64),
}

/// Builds and validates an instance. A missing penalty falls back to
/// [`default_penalty`].
pub fn build_instance(
    n: usize,
    k: usize,
    source: WeightSource,
    penalty_a: Option<f64>,
) -> Result<VrpInstance> {
    if n < 2 {
        return Err(Error::InvalidInstance(format!("n must be at least 2, got {n}")));
    }
    if n > MAX_NODES {
        return Err(Error::InvalidInstance(format!(
            "n must be at most {MAX_NODES}, got {n}"
        )));
    }
    if k < 1 || k > n - 1 {
        return Err(Error::InvalidInstance(format!(
            "k must lie in [1, {}], got {k}",
            n - 1
        )));
    }
    let weights = match source {
        WeightSource::Explicit(w) => w,
        WeightSource::Seeded(s) => seeded_weights(n, s),
    };
    if weights.len() != n || weights.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInstance(format!(
            "weights must be a {n}x{n} matrix"
        )));
    }
    for (i, row) in weights.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if i != j && !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "weight w[{i}][{j}] = {w} must be finite and non-negative"
                )));
            }
        }
    }
    let penalty_a = penalty_a.unwrap_or_else(|| default_penalty(&weights));
    if !(penalty_a.is_finite() && penalty_a > 0.0) {
        return Err(Error::InvalidInstance(format!(
            "penalty_a must be positive, got {penalty_a}"
        )));
    }
    Ok(VrpInstance {
        n,
        k,
        weights,
        penalty_a,
    })
}

fn seeded_weights(n: usize, seed_value: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed_value);
    let mut w = vec![vec![0.0; n]; n];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = 1.0 + 9.0 * seed::unit_f64(rng.next_u64());
            }
        }
    }
    w
}

/// `ceil(sum of off-diagonal weights) + 1`: any constraint violation costs
/// more than every feasible tour.
pub fn default_penalty(weights: &[Vec<f64>]) -> f64 {
    let total: f64 = weights
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |(j, _)| *j != i)
                .map(|(_, w)| *w)
        })
        .sum();
    total.ceil() + 1.0
}

/// Seed of the in-repo reference instances.
pub const REFERENCE_SEED: u64 = 2023;

/// The fixed reference instance with `n` nodes and two vehicles
/// (`n = 3` gives 6 qubits, `n = 4` gives 12).
pub fn reference_instance(n: usize) -> VrpInstance {
    build_instance(n, 2.min(n - 1), WeightSource::Seeded(REFERENCE_SEED), None)
        .expect("reference instance parameters are valid")
}

impl VrpInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn penalty_a(&self) -> f64 {
        self.penalty_a
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    /// `n(n-1)`, also the qubit count of the encoded Hamiltonian.
    pub fn num_variables(&self) -> usize {
        self.n * (self.n - 1)
    }

    /// Position of `x(i,j)` in the variable vector.
    pub fn variable_index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i == j {
            return None;
        }
        Some(i * (self.n - 1) + if j < i { j } else { j - 1 })
    }

    /// The directed edge `(i, j)` behind variable `v`.
    pub fn edge(&self, v: usize) -> (usize, usize) {
        let i = v / (self.n - 1);
        let r = v % (self.n - 1);
        (i, if r < i { r } else { r + 1 })
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_variables()).map(move |v| self.edge(v))
    }

    /// Edge weights in variable order.
    pub fn weight_vector(&self) -> Vec<f64> {
        self.edges().map(|(i, j)| self.weights[i][j]).collect()
    }

    /// Indicator of the edges leaving node `i`.
    pub fn source_indicator(&self, i: usize) -> Vec<f64> {
        self.edges()
            .map(|(a, _)| if a == i { 1.0 } else { 0.0 })
            .collect()
    }

    /// Indicator of the edges entering node `i`.
    pub fn target_indicator(&self, i: usize) -> Vec<f64> {
        self.edges()
            .map(|(_, b)| if b == i { 1.0 } else { 0.0 })
            .collect()
    }

    /// Required in- and out-degree of node `i`: `k` at the depot, 1 elsewhere.
    fn degree_target(&self, i: usize) -> f64 {
        if i == 0 {
            self.k as f64
        } else {
            1.0
        }
    }

    /// Evaluates the routing Hamiltonian term by term: edge cost plus the
    /// four squared degree penalties. Independent of the matrix encoding.
    pub fn penalty_energy(&self, x: &Assignment) -> Result<f64> {
        check_dim(self.num_variables(), x.len())?;
        let a = self.penalty_a;
        let mut out = vec![0.0f64; self.n];
        let mut inn = vec![0.0f64; self.n];
        let mut cost = 0.0;
        for (v, (i, j)) in self.edges().enumerate() {
            if x.get(v) {
                cost += self.weights[i][j];
                out[i] += 1.0;
                inn[j] += 1.0;
            }
        }
        let customers: f64 = (1..self.n)
            .map(|i| (1.0 - out[i]).powi(2) + (1.0 - inn[i]).powi(2))
            .sum();
        let k = self.k as f64;
        let depot = (k - out[0]).powi(2) + (k - inn[0]).powi(2);
        Ok(cost + a * (customers + depot))
    }
}

/// Serialized instance: explicit weights or a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<VrpInstance> {
        let source = match (&self.weights, self.seed) {
            (Some(w), None) => WeightSource::Explicit(w.clone()),
            (None, Some(s)) => WeightSource::Seeded(s),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInstance(
                    "give either weights or seed, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidInstance("missing weights or seed".into()))
            }
        };
        build_instance(self.n, self.k, source, self.penalty_a)
    }
}

impl From<&VrpInstance> for InstanceSpec {
    fn from(inst: &VrpInstance) -> Self {
        InstanceSpec {
            n: inst.n,
            k: inst.k,
            penalty_a: Some(inst.penalty_a),
            weights: Some(inst.weights.clone()),
            seed: None,
        }
    }
}

/// A 0/1 value for every decision variable, in variable order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    pub fn zeros(m: usize) -> Self {
        Assignment(vec![false; m])
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Assignment(bits.iter().map(|&b| b != 0).collect())
    }

    /// Decodes a simulator basis index: qubit `q` (bit `q` of the index)
    /// holds variable `q`.
    pub fn from_basis_index(index: usize, m: usize) -> Self {
        Assignment((0..m).map(|q| (index >> q) & 1 == 1).collect())
    }

    pub fn basis_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (q, &b)| acc | ((b as usize) << q))
    }

    /// Inverse of [`Assignment::lex_value`]: variable 0 is the most
    /// significant bit.
    pub fn from_lex_value(value: u64, m: usize) -> Self {
        Assignment((0..m).map(|i| (value >> (m - 1 - i)) & 1 == 1).collect())
    }

    pub fn lex_value(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: usize) -> bool {
        self.0[v]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Spin image `s = 2x - 1`.
    pub fn spins(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect()
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&b| b as u8 as f64)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!(
                    "assignment strings hold only '0' and '1', found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment)
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `x^T Q x + g^T x + c` over binary `x`. `q` is dense row-major and need
/// not be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboForm {
    dim: usize,
    q: Vec<f64>,
    g: Vec<f64>,
    c: f64,
}

impl QuboForm {
    pub fn new(dim: usize, q: Vec<f64>, g: Vec<f64>, c: f64) -> Result<Self> {
        check_dim(dim * dim, q.len())?;
        check_dim(dim, g.len())?;
        Ok(QuboForm { dim, q, g, c })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.dim + j]
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn evaluate(&self, x: &Assignment) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let xs: Vec<f64> = x.values().collect();
        let mut total = self.c;
        for i in 0..self.dim {
            if xs[i] == 0.0 {
                continue;
            }
            total += self.g[i];
            let row = &self.q[i * self.dim..(i + 1) * self.dim];
            total += row.iter().zip(&xs).map(|(q, x)| q * x).sum::<f64>();
        }
        Ok(total)
    }

    /// Same form with the constant shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        QuboForm {
            c: self.c + delta,
            ..self.clone()
        }
    }
}

/// Assembles the penalty QUBO of the routing Hamiltonian.
///
/// With `S` and `T` the `n x m` matrices whose rows are the out- and
/// in-edge indicators of each node, and `mu = (k, 1, .., 1)`:
///
/// ```text
/// Q = A (S^T S + T^T T)          S^T S = I_n (x) J_{n-1}
/// g = W - 2A (S^T mu + T^T mu)
/// c = 2A(n-1) + 2A k^2
/// ```
pub fn build_qubo(instance: &VrpInstance) -> QuboForm {
    let n = instance.n;
    let m = instance.num_variables();
    let a = instance.penalty_a;
    let sources: Vec<Vec<f64>> = (0..n).map(|i| instance.source_indicator(i)).collect();
    let targets: Vec<Vec<f64>> = (0..n).map(|i| instance.target_indicator(i)).collect();

    let mut q = vec![0.0; m * m];
    for ind in sources.iter().chain(&targets) {
        for (u, &zu) in ind.iter().enumerate() {
            if zu == 0.0 {
                continue;
            }
            for (v, &zv) in ind.iter().enumerate() {
                q[u * m + v] += a * zu * zv;
            }
        }
    }

    let mut g = instance.weight_vector();
    for node in 0..n {
        let mu = instance.degree_target(node);
        for v in 0..m {
            g[v] -= 2.0 * a * mu * (sources[node][v] + targets[node][v]);
        }
    }

    let k = instance.k as f64;
    let c = 2.0 * a * (n as f64 - 1.0) + 2.0 * a * k * k;
    QuboForm { dim: m, q, g, c }
}

/// `-sum_{i<j} J_ij s_i s_j - sum_i h_i s_i + d` over spins `s = 2x - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingForm {
    dim: usize,
    /// Dense `dim x dim`, only `i < j` populated.
    j: Vec<f64>,
    h: Vec<f64>,
    d: f64,
}

impl IsingForm {
    /// `couplings` lists `(i, j, J_ij)`; pairs are normalised to `i < j`
    /// and repeated pairs add up.
    pub fn new(dim: usize, couplings: &[(usize, usize, f64)], h: Vec<f64>, d: f64) -> Result<Self> {
        check_dim(dim, h.len())?;
        let mut j = vec![0.0; dim * dim];
        for &(a, b, v) in couplings {
            if a == b || a >= dim || b >= dim {
                return Err(Error::InvalidInstance(format!(
                    "coupling ({a}, {b}) invalid for dimension {dim}"
                )));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            j[lo * dim + hi] += v;
        }
        Ok(IsingForm { dim, j, h, d })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `J_ij` for `i < j`; zero otherwise.
    pub fn j(&self, i: usize, j: usize) -> f64 {
        if i < j {
            self.j[i * self.dim + j]
        } else {
            0.0
        }
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Non-zero couplings in ascending `(i, j)` order.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let v = self.j[i * self.dim + j];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn evaluate(&self, x: &Assignment) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.evaluate_spins(&x.spins()))
    }

    fn evaluate_spins(&self, s: &[f64]) -> f64 {
        let mut e = self.d;
        for i in 0..self.dim {
            e -= self.h[i] * s[i];
            let row = &self.j[i * self.dim..(i + 1) * self.dim];
            for j in i + 1..self.dim {
                if row[j] != 0.0 {
                    e -= row[j] * s[i] * s[j];
                }
            }
        }
        e
    }

    pub fn shifted(&self, delta: f64) -> Self {
        IsingForm {
            d: self.d + delta,
            ..self.clone()
        }
    }
}

/// Substitutes `x = (s + 1) / 2` into the QUBO, folding both triangles of `Q`:
///
/// ```text
/// J_ij = -(Q_ij + Q_ji) / 4                       (i < j)
/// h_i  = -(g_i / 2 + sum_j Q_ij / 4 + sum_j Q_ji / 4)
/// d    = c + sum_i g_i / 2 + sum_ij Q_ij / 4 + sum_i Q_ii / 4
/// ```
///
/// The last term of `d` comes from `x_i^2 = x_i`.
pub fn qubo_to_ising(qubo: &QuboForm) -> IsingForm {
    let m = qubo.dim;
    let mut j = vec![0.0; m * m];
    let mut h = vec![0.0; m];
    let mut d = qubo.c;
    for a in 0..m {
        let mut field = qubo.g[a] / 2.0;
        for b in 0..m {
            field += (qubo.q(a, b) + qubo.q(b, a)) / 4.0;
            d += qubo.q(a, b) / 4.0;
            if a < b {
                j[a * m + b] = -(qubo.q(a, b) + qubo.q(b, a)) / 4.0;
            }
        }
        h[a] = -field;
        d += qubo.g[a] / 2.0 + qubo.q(a, a) / 4.0;
    }
    IsingForm { dim: m, j, h, d }
}

/// Exact ground state by enumeration of all `2^m` assignments. Ties go to
/// the assignment with the smallest [`Assignment::lex_value`].
pub fn brute_force_minimum(ising: &IsingForm) -> Result<(Assignment, f64)> {
    let m = ising.dim;
    if m > MAX_BRUTE_FORCE_DIM {
        return Err(Error::GuardExceeded {
            what: "brute-force enumeration",
            requested: m,
            limit: MAX_BRUTE_FORCE_DIM,
        });
    }
    let total: u64 = 1 << m;
    let chunk: u64 = 1 << 12;
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut s = vec![0.0; m];
            let mut best = (f64::INFINITY, u64::MAX);
            for value in c * chunk..((c + 1) * chunk).min(total) {
                for (i, si) in s.iter_mut().enumerate() {
                    *si = if (value >> (m - 1 - i)) & 1 == 1 { 1.0 } else { -1.0 };
                }
                let e = ising.evaluate_spins(&s);
                if e < best.0 {
                    best = (e, value);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    Ok((Assignment::from_lex_value(best.1, m), best.0))
}

/// Vehicle tours, each `[0, .., 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSet {
    pub routes: Vec<Vec<usize>>,
    pub total_cost: f64,
}

/// First constraint an assignment violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    OutDegree { node: usize, degree: usize },
    InDegree { node: usize, degree: usize },
    Subtour { nodes: Vec<usize> },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::OutDegree { node, degree } => {
                write!(f, "node {node} out-degree {degree}")
            }
            Infeasibility::InDegree { node, degree } => {
                write!(f, "node {node} in-degree {degree}")
            }
            Infeasibility::Subtour { nodes } => write!(f, "subtour not through depot: {nodes:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Feasible(RouteSet),
    Infeasible(Infeasibility),
}

impl Decoded {
    pub fn routes(&self) -> Option<&RouteSet> {
        match self {
            Decoded::Feasible(r) => Some(r),
            Decoded::Infeasible(_) => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Decoded::Feasible(_))
    }
}

/// Checks the degree constraints (customers first, then the depot) and
/// follows edges from the depot to recover the tours.
pub fn decode_routes(instance: &VrpInstance, x: &Assignment) -> Result<Decoded> {
    check_dim(instance.num_variables(), x.len())?;
    let n = instance.n;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (v, (i, j)) in instance.edges().enumerate() {
        if x.get(v) {
            succ[i].push(j);
            indeg[j] += 1;
        }
    }
    let need = |i: usize| if i == 0 { instance.k } else { 1 };
    for node in (1..n).chain(std::iter::once(0)) {
        if succ[node].len() != need(node) {
            return Ok(Decoded::Infeasible(Infeasibility::OutDegree {
                node,
                degree: succ[node].len(),
            }));
        }
        if indeg[node] != need(node) {
            return Ok(Decoded::Infeasible(Infeasibility::InDegree {
                node,
                degree: indeg[node],
            }));
        }
    }

    let mut visited = vec![false; n];
    let mut routes = Vec::with_capacity(instance.k);
    for &first in &succ[0] {
        let mut route = vec![0, first];
        let mut at = first;
        // each customer has one successor and one predecessor, so the walk
        // must come back to the depot within n steps
        while at != 0 {
            visited[at] = true;
            at = succ[at][0];
            route.push(at);
        }
        routes.push(route);
    }
    let stranded: Vec<usize> = (1..n).filter(|&i| !visited[i]).collect();
    if !stranded.is_empty() {
        return Ok(Decoded::Infeasible(Infeasibility::Subtour { nodes: stranded }));
    }
    let total_cost = vrp_cost(instance, &routes)?;
    Ok(Decoded::Feasible(RouteSet { routes, total_cost }))
}

/// Sum of edge weights along every route.
pub fn vrp_cost(instance: &VrpInstance, routes: &[Vec<usize>]) -> Result<f64> {
    let mut total = 0.0;
    for route in routes {
        if route.len() < 2 {
            return Err(Error::InvalidRoute(format!(
                "route {route:?} has no edges"
            )));
        }
        if let Some(&bad) = route.iter().find(|&&v| v >= instance.n) {
            return Err(Error::InvalidRoute(format!(
                "node {bad} out of range for n = {}",
                instance.n
            )));
        }
        for w in route.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidRoute(format!("self-loop at node {}", w[0])));
            }
            total += instance.weights[w[0]][w[1]];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(a: f64) -> VrpInstance {
        build_instance(
            2,
            1,
            WeightSource::Explicit(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            Some(a),
        )
        .unwrap()
    }

    fn x(bits: &[u8]) -> Assignment {
        Assignment::from_bits(bits)
    }

    #[test]
    fn variable_counts() {
        let three = build_instance(3, 2, WeightSource::Seeded(1), Some(10.0)).unwrap();
        assert_eq!(three.num_variables(), 6);
        let four = build_instance(4, 2, WeightSource::Seeded(1), None).unwrap();
        assert_eq!(four.num_variables(), 12);
        assert_eq!(tiny(1.0).num_variables(), 2);
    }

    #[test]
    fn variable_order_is_row_major_without_diagonal() {
        let inst = build_instance(3, 1, WeightSource::Seeded(0), None).unwrap();
        let edges: Vec<_> = inst.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        for (v, (i, j)) in edges.into_iter().enumerate() {
            assert_eq!(inst.variable_index(i, j), Some(v));
        }
        assert_eq!(inst.variable_index(1, 1), None);
    }

    #[test]
    fn instance_validation() {
        let ok = || WeightSource::Seeded(3);
        assert!(build_instance(1, 1, ok(), None).is_err());
        assert!(build_instance(3, 0, ok(), None).is_err());
        assert!(build_instance(3, 3, ok(), None).is_err());
        assert!(build_instance(3, 2, ok(), Some(0.0)).is_err());
        assert!(build_instance(3, 2, ok(), Some(-1.0)).is_err());
        let neg = vec![vec![0.0, -1.0], vec![1.0, 0.0]];
        assert!(build_instance(2, 1, WeightSource::Explicit(neg), None).is_err());
        let ragged = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(build_instance(2, 1, WeightSource::Explicit(ragged), None).is_err());
    }

    #[test]
    fn seeded_weights_are_reproducible_and_in_range() {
        let a = build_instance(4, 2, WeightSource::Seeded(99), None).unwrap();
        let b = build_instance(4, 2, WeightSource::Seeded(99), None).unwrap();
        let c = build_instance(4, 2, WeightSource::Seeded(100), None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (i, j) in a.edges() {
            assert!((1.0..10.0).contains(&a.weight(i, j)));
        }
        // w_ij and w_ji are drawn independently
        assert_ne!(a.weight(0, 1), a.weight(1, 0));
    }

    #[test]
    fn default_penalty_dominates_total_weight() {
        let w = vec![vec![0.0, 1.5], vec![2.2, 0.0]];
        assert_eq!(default_penalty(&w), 5.0);
    }

    #[test]
    fn qubo_constant() {
        let inst = build_instance(3, 2, WeightSource::Seeded(4), Some(10.0)).unwrap();
        assert_eq!(build_qubo(&inst).c(), 120.0);
        assert_eq!(build_qubo(&tiny(1.0)).c(), 4.0);
    }

    #[test]
    fn qubo_tiny_values() {
        let qubo = build_qubo(&tiny(10.0));
        assert_eq!(qubo.evaluate(&x(&[0, 0])).unwrap(), qubo.c());
        assert_eq!(qubo.evaluate(&x(&[1, 1])).unwrap(), 2.0);
        let inst = tiny(10.0);
        for v in 0..4 {
            let a = Assignment::from_lex_value(v, 2);
            assert_eq!(
                qubo.evaluate(&a).unwrap(),
                inst.penalty_energy(&a).unwrap()
            );
        }
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let qubo = build_qubo(&tiny(1.0));
        assert_eq!(
            qubo.evaluate(&x(&[1])),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
        let ising = qubo_to_ising(&qubo);
        assert!(ising.evaluate(&x(&[1, 1, 1])).is_err());
    }

    #[test]
    fn constant_only_forms() {
        let qubo = QuboForm::new(3, vec![0.0; 9], vec![0.0; 3], 5.0).unwrap();
        let ising = qubo_to_ising(&qubo);
        assert!(ising.couplings().is_empty());
        assert!(ising.h().iter().all(|&h| h == 0.0));
        assert_eq!(ising.d(), 5.0);

        let seven = IsingForm::new(2, &[], vec![0.0; 2], 7.0).unwrap();
        assert_eq!(seven.evaluate(&x(&[1, 0])).unwrap(), 7.0);
    }

    #[test]
    fn single_field_sign() {
        let ising = IsingForm::new(1, &[], vec![1.0], 0.0).unwrap();
        assert_eq!(ising.evaluate(&x(&[1])).unwrap(), -1.0);
        assert_eq!(ising.evaluate(&x(&[0])).unwrap(), 1.0);
    }

    #[test]
    fn brute_force_tie_break_and_tiny_minimum() {
        let flat = IsingForm::new(4, &[], vec![0.0; 4], 3.0).unwrap();
        let (a, e) = brute_force_minimum(&flat).unwrap();
        assert_eq!(a, Assignment::zeros(4));
        assert_eq!(e, 3.0);

        let ising = qubo_to_ising(&build_qubo(&tiny(10.0)));
        let (a, e) = brute_force_minimum(&ising).unwrap();
        assert_eq!(a, x(&[1, 1]));
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_guard() {
        let big = IsingForm::new(25, &[], vec![0.0; 25], 0.0).unwrap();
        assert!(matches!(
            brute_force_minimum(&big),
            Err(Error::GuardExceeded { limit: 24, .. })
        ));
    }

    #[test]
    fn decode_examples() {
        let inst = build_instance(3, 2, WeightSource::Seeded(8), None).unwrap();
        let d = decode_routes(&inst, &x(&[1, 1, 1, 0, 1, 0])).unwrap();
        assert_eq!(d.routes().unwrap().routes, vec![vec![0, 1, 0], vec![0, 2, 0]]);

        let zero = decode_routes(&inst, &Assignment::zeros(6)).unwrap();
        match zero {
            Decoded::Infeasible(why) => assert_eq!(why.to_string(), "node 1 out-degree 0"),
            _ => panic!("all-zero assignment decoded as feasible"),
        }

        let one = build_instance(3, 1, WeightSource::Seeded(8), None).unwrap();
        // 0->1, 1->2, 2->0
        let d = decode_routes(&one, &x(&[1, 0, 0, 1, 1, 0])).unwrap();
        assert_eq!(d.routes().unwrap().routes, vec![vec![0, 1, 2, 0]]);
    }

    #[test]
    fn decode_reports_subtours() {
        let inst = build_instance(4, 1, WeightSource::Seeded(2), None).unwrap();
        let mut bits = vec![false; 12];
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            bits[inst.variable_index(i, j).unwrap()] = true;
        }
        let d = decode_routes(&inst, &Assignment::new(bits)).unwrap();
        assert_eq!(d, Decoded::Infeasible(Infeasibility::Subtour { nodes: vec![2, 3] }));
    }

    #[test]
    fn route_cost() {
        let inst = build_instance(
            2,
            1,
            WeightSource::Explicit(vec![vec![0.0, 3.0], vec![4.0, 0.0]]),
            None,
        )
        .unwrap();
        assert_eq!(vrp_cost(&inst, &[vec![0, 1, 0]]).unwrap(), 7.0);
        assert!(vrp_cost(&inst, &[vec![]]).is_err());
        assert!(vrp_cost(&inst, &[vec![0, 5, 0]]).is_err());
    }

    #[test]
    fn assignment_strings() {
        let a: Assignment = "110100".parse().unwrap();
        assert_eq!(a.to_string(), "110100");
        assert_eq!(a.lex_value(), 0b110100);
        assert_eq!(a.basis_index(), 0b001011);
        assert_eq!(Assignment::from_basis_index(0b001011, 6), a);
        assert!("10x".parse::<Assignment>().is_err());
    }

    #[test]
    fn instance_spec_json() {
        let spec: InstanceSpec =
            serde_json::from_str(r#"{"n":3,"k":2,"penalty_a":10,"seed":5}"#).unwrap();
        let inst = spec.build().unwrap();
        assert_eq!(inst.penalty_a(), 10.0);
        let round: InstanceSpec =
            serde_json::from_str(&serde_json::to_string(&InstanceSpec::from(&inst)).unwrap())
                .unwrap();
        assert_eq!(round.build().unwrap(), inst);
        let both: InstanceSpec = serde_json::from_str(
            r#"{"n":2,"k":1,"seed":5,"weights":[[0,1],[1,0]]}"#,
        )
        .unwrap();
        assert!(both.build().is_err());
    }
}
