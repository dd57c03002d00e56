//! Exponent calculus on weighted graphs `G = (V, theta, q)`.
//!
//! A functional encoded by `G` has Sobolev norms of order `n^{e(G)}`, with
//! `e(G) = sum_C (e_theta(C) + e_q(C))` over connected components. The
//! edge-class count `l2(C)` and the component class are supplied as
//! annotations at construction.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::combinatorics::LambdaIndex;
use crate::kernel::HurstParam;
use crate::{Error, Result};

/// Half-vertex `(v, kappa)` with `kappa in {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfVertex {
    pub vertex: usize,
    pub kappa: u8,
}

impl HalfVertex {
    pub fn new(vertex: usize, kappa: u8) -> Self {
        Self { vertex, kappa }
    }
}

/// Unordered pair of half-vertices carrying `multiplicity` theta-weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaEdge {
    pub a: HalfVertex,
    pub b: HalfVertex,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentClass {
    QFree,
    Class1,
    Class2,
}

/// Per-component annotation: the class-2 edge count `l2` and the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub l2: u32,
    pub class: ComponentClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub theta_bar: u32,
    pub q_bar: u32,
    pub l2: u32,
    pub class: ComponentClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    vertex_count: usize,
    theta: Vec<ThetaEdge>,
    q: Vec<(HalfVertex, u32)>,
    components: Vec<Component>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl WeightedGraph {
    /// Builds the graph and splits it into theta-connected components,
    /// ordered by smallest vertex; `annotations[i]` belongs to component `i`.
    pub fn new(vertex_count: usize, theta: Vec<ThetaEdge>, q: Vec<(HalfVertex, u32)>, annotations: &[Annotation]) -> Result<Self> {
        let bad = |msg: String| Error::InconsistentAnnotation(msg);
        let check = |hv: &HalfVertex| -> Result<()> {
            if hv.vertex >= vertex_count || !(hv.kappa == 1 || hv.kappa == 2) {
                return Err(bad(format!("half-vertex {hv:?} outside the graph")));
            }
            Ok(())
        };
        for e in &theta {
            check(&e.a)?;
            check(&e.b)?;
        }
        for (hv, _) in &q {
            check(hv)?;
        }
        let mut parent: Vec<usize> = (0..vertex_count).collect();
        for e in theta.iter().filter(|e| e.multiplicity > 0) {
            let (ra, rb) = (find(&mut parent, e.a.vertex), find(&mut parent, e.b.vertex));
            parent[ra.max(rb)] = ra.min(rb);
        }
        let roots: Vec<usize> = (0..vertex_count).map(|v| find(&mut parent, v)).collect();
        let mut reps: Vec<usize> = roots.clone();
        reps.sort_unstable();
        reps.dedup();
        if reps.len() != annotations.len() {
            return Err(bad(format!("{} components but {} annotations", reps.len(), annotations.len())));
        }
        let mut components = Vec::with_capacity(reps.len());
        for (rep, ann) in reps.iter().zip(annotations) {
            let vertices: Vec<usize> = (0..vertex_count).filter(|&v| roots[v] == *rep).collect();
            let theta_bar = theta.iter().filter(|e| roots[e.a.vertex] == *rep).map(|e| e.multiplicity).sum();
            let q_bar = q.iter().filter(|(hv, _)| roots[hv.vertex] == *rep).map(|(_, m)| m).sum();
            if (q_bar == 0) != (ann.class == ComponentClass::QFree) {
                return Err(bad(format!("component at vertex {rep}: q-bar {q_bar} with class {:?}", ann.class)));
            }
            if ann.l2 > theta_bar {
                return Err(bad(format!("component at vertex {rep}: l2 = {} exceeds {theta_bar} edges", ann.l2)));
            }
            components.push(Component { vertices, theta_bar, q_bar, l2: ann.l2, class: ann.class });
        }
        Ok(Self { vertex_count, theta, q, components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Side-by-side union; components keep their annotations.
    pub fn disjoint_union(&self, other: &Self) -> Self {
        let shift = |hv: HalfVertex| HalfVertex::new(hv.vertex + self.vertex_count, hv.kappa);
        let mut theta = self.theta.clone();
        theta.extend(other.theta.iter().map(|e| ThetaEdge { a: shift(e.a), b: shift(e.b), multiplicity: e.multiplicity }));
        let mut q = self.q.clone();
        q.extend(other.q.iter().map(|&(hv, m)| (shift(hv), m)));
        let mut components = self.components.clone();
        components.extend(
            other
                .components
                .iter()
                .map(|c| Component { vertices: c.vertices.iter().map(|v| v + self.vertex_count).collect(), ..c.clone() }),
        );
        Self { vertex_count: self.vertex_count + other.vertex_count, theta, q, components }
    }
}

/// `e_theta(C) = 1 - 2H theta_bar + (2H - 1)(|V| - 1 - l2)`.
pub fn e_theta(c: &Component, h: HurstParam) -> f64 {
    let two_h = h.alpha();
    1.0 - two_h * f64::from(c.theta_bar) + (two_h - 1.0) * (c.vertices.len() as f64 - 1.0 - f64::from(c.l2))
}

/// `e_q(C)`: 0 when q-free, `-1/2 - H q_bar` for class 2, `-1 - H (q_bar - 1)` for class 1.
pub fn e_q(c: &Component, h: HurstParam) -> f64 {
    let (hv, q) = (h.value(), f64::from(c.q_bar));
    match c.class {
        ComponentClass::QFree => 0.0,
        ComponentClass::Class2 => -0.5 - hv * q,
        ComponentClass::Class1 => -1.0 - hv * (q - 1.0),
    }
}

/// `e(G)`.
pub fn exponent(g: &WeightedGraph, h: HurstParam) -> f64 {
    g.components.iter().map(|c| e_theta(c, h) + e_q(c, h)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvCase {
    /// No component carries q-weight: gain `H`.
    QFree,
    /// Every q-carrying component has `q_bar != q`: gain `1/2`.
    OrderMismatch,
    /// No improvement over `e(G)`.
    General,
}

/// Bound on the exponent after applying `D_{v_n}` with `v_n` of chaos order `q`.
pub fn dv_exponent_bound(g: &WeightedGraph, q: u32, h: HurstParam) -> Result<(f64, DvCase)> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("chaos order of v must be at least 2, got {q}")));
    }
    let e = exponent(g, h);
    let carrying: Vec<&Component> = g.components.iter().filter(|c| c.q_bar > 0).collect();
    Ok(if carrying.is_empty() {
        (e - h.value(), DvCase::QFree)
    } else if carrying.iter().all(|c| c.q_bar != q) {
        (e - 0.5, DvCase::OrderMismatch)
    } else {
        (e, DvCase::General)
    })
}

/// Functionals whose orders are checked empirically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalId {
    /// `G_n^{(l1,l2;m)}`.
    G { l1: u32, l2: u32, m: u32 },
    /// Triple sum attached to a sharp index.
    ISharp { l1: u32, l2: u32, l3: u32, m: u32 },
    /// `H`-norm of `u_n^{(l)}`.
    UNorm { l: u32 },
    /// Principal part `M'_n^{(l)}`.
    MPrime { l: u32 },
}

impl fmt::Display for FunctionalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::G { l1, l2, m } => write!(f, "G({l1},{l2};{m})"),
            Self::ISharp { l1, l2, l3, m } => write!(f, "I#({l1},{l2},{l3};{m})"),
            Self::UNorm { l } => write!(f, "u({l})"),
            Self::MPrime { l } => write!(f, "M'({l})"),
        }
    }
}

fn parse_args(s: &str) -> Option<(Vec<u32>, Option<u32>)> {
    let inner = s.strip_prefix('(')?.strip_suffix(')')?;
    let (head, tail) = match inner.split_once(';') {
        Some((h, t)) => (h, Some(t.trim().parse().ok()?)),
        None => (inner, None),
    };
    let nums = head.split(',').map(|x| x.trim().parse().ok()).collect::<Option<Vec<u32>>>()?;
    Some((nums, tail))
}

impl FromStr for FunctionalId {
    type Err = Error;

    /// Parses `G(l1,l2;m)`, `I#(l1,l2,l3;m)`, `u(l)` and `M'(l)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = || Error::InvalidArgument(format!("unrecognized functional '{s}'; expected G(l1,l2;m), I#(l1,l2,l3;m), u(l) or M'(l)"));
        let (name, rest) = s.find('(').map(|i| s.split_at(i)).ok_or_else(err)?;
        let (nums, m) = parse_args(rest).ok_or_else(err)?;
        let id = match (name, nums.as_slice(), m) {
            ("G", &[l1, l2], Some(m)) => Self::G { l1, l2, m },
            ("I#", &[l1, l2, l3], Some(m)) => Self::ISharp { l1, l2, l3, m },
            ("u", &[l], None) => Self::UNorm { l },
            ("M'", &[l], None) => Self::MPrime { l },
            _ => return Err(err()),
        };
        Ok(id)
    }
}

/// How the exponents of an entry's graphs combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Max,
    /// Half the maximum: the graphs encode the square of the functional.
    HalfMax,
}

/// Graphs and `n`-power prefactor `n^{prefactor_h H + prefactor_const}`
/// reproducing the orders stated for a catalog functional.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub id: FunctionalId,
    pub graphs: Vec<WeightedGraph>,
    pub prefactor_h: f64,
    pub prefactor_const: f64,
    pub reduction: Reduction,
}

impl CatalogEntry {
    /// Predicted exponent of the functional's norm in `n`.
    pub fn predicted_exponent(&self, h: HurstParam) -> f64 {
        let max = self.graphs.iter().map(|g| exponent(g, h)).fold(f64::NEG_INFINITY, f64::max);
        let e = self.prefactor_h * h.value() + self.prefactor_const;
        match self.reduction {
            Reduction::Max => e + max,
            Reduction::HalfMax => 0.5 * (e + max),
        }
    }
}

fn class_of(q_bar: u32) -> ComponentClass {
    if q_bar == 0 {
        ComponentClass::QFree
    } else {
        ComponentClass::Class2
    }
}

/// Two vertices joined by `theta` edges with `q_each` chaos weight on each.
fn pair_graph(theta: u32, qa: u32, qb: u32) -> Result<WeightedGraph> {
    let (a, b) = (HalfVertex::new(0, 1), HalfVertex::new(1, 1));
    let q = vec![(HalfVertex::new(0, 2), qa), (HalfVertex::new(1, 2), qb)];
    WeightedGraph::new(2, vec![ThetaEdge { a, b, multiplicity: theta }], q, &[Annotation { l2: 1, class: class_of(qa + qb) }])
}

/// Catalog encoding of `id` for power index `k`.
pub fn catalog_entry(id: FunctionalId, k: u32) -> Result<CatalogEntry> {
    let (graphs, prefactor_h, prefactor_const, reduction) = match id {
        FunctionalId::G { l1, l2, m } => {
            let idx = LambdaIndex::new(k, l1, l2, m)?;
            let g = pair_graph(m + 1, idx.q1(), idx.q2())?;
            (vec![g], 2.0 * f64::from(l1 + l2), -1.0, Reduction::Max)
        }
        FunctionalId::ISharp { l1, l2, l3, m } => {
            let idx = LambdaIndex::new(k, l1, l2, m)?;
            if idx.is_zero_class() || l3 == 0 || l3 > k || 2 * l3 != idx.q1() + idx.q2() {
                return Err(Error::InvalidArgument(format!("{id} is not a sharp index for k={k}")));
            }
            let hv = |v| HalfVertex::new(v, 1);
            let theta = vec![
                ThetaEdge { a: hv(0), b: hv(1), multiplicity: m + 1 },
                ThetaEdge { a: hv(0), b: hv(2), multiplicity: idx.q1() },
                ThetaEdge { a: hv(1), b: hv(2), multiplicity: idx.q2() },
            ];
            let g = WeightedGraph::new(3, theta, vec![], &[Annotation { l2: 2, class: ComponentClass::QFree }])?;
            (vec![g], 2.0 * f64::from(l1 + l2 + l3), -1.5, Reduction::Max)
        }
        FunctionalId::UNorm { l } => {
            if l == 0 || l > k {
                return Err(Error::InvalidArgument(format!("{id} needs 1 <= l <= {k}")));
            }
            let graphs = (0..2 * l).map(|r| pair_graph(r + 1, 2 * l - 1 - r, 2 * l - 1 - r)).collect::<Result<Vec<_>>>()?;
            (graphs, 4.0 * f64::from(l), -1.0, Reduction::HalfMax)
        }
        FunctionalId::MPrime { l } => {
            if l == 0 || l > k {
                return Err(Error::InvalidArgument(format!("{id} needs 1 <= l <= {k}")));
            }
            let g = WeightedGraph::new(
                1,
                vec![],
                vec![(HalfVertex::new(0, 1), 2 * l)],
                &[Annotation { l2: 0, class: ComponentClass::Class2 }],
            )?;
            (vec![g], 2.0 * f64::from(l), -0.5, Reduction::Max)
        }
    };
    Ok(CatalogEntry { id, graphs, prefactor_h, prefactor_const, reduction })
}

/// Every catalog functional for power index `k`.
pub fn catalog(k: u32) -> Result<Vec<FunctionalId>> {
    let sets = crate::combinatorics::lambda_sets(k)?;
    let mut ids: Vec<FunctionalId> = sets.all.iter().map(|i| FunctionalId::G { l1: i.l1, l2: i.l2, m: i.m }).collect();
    ids.extend(sets.sharp.iter().map(|s| FunctionalId::ISharp { l1: s.lambda.l1, l2: s.lambda.l2, l3: s.l3, m: s.lambda.m }));
    ids.extend((1..=k).map(|l| FunctionalId::UNorm { l }));
    ids.extend((1..=k).map(|l| FunctionalId::MPrime { l }));
    Ok(ids)
}

/// Catalog names, for listings.
pub fn catalog_names(k: u32) -> Result<Vec<String>> {
    Ok(catalog(k)?.iter().map(ToString::to_string).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hp(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    fn single(q: u32, class: ComponentClass) -> WeightedGraph {
        let q = if q == 0 { vec![] } else { vec![(HalfVertex::new(0, 1), q)] };
        WeightedGraph::new(1, vec![], q, &[Annotation { l2: 0, class }]).unwrap()
    }

    #[test]
    fn single_vertex_exponent() {
        // 1/2 - H(2l - 1) for q_bar = 2l - 1 under the -1/2 - H q_bar branch
        let h = hp(0.7);
        for l in 1..4 {
            let g = single(2 * l - 1, ComponentClass::Class2);
            assert!((exponent(&g, h) - (0.5 - 0.7 * f64::from(2 * l - 1))).abs() < 1e-14);
            let g1 = single(2 * l - 1, ComponentClass::Class1);
            assert!((exponent(&g1, h) - (-0.7 * f64::from(2 * l - 2))).abs() < 1e-14);
        }
    }

    #[test]
    fn two_vertex_component_gives_minus_half() {
        let k = 3;
        for h in [0.6, 0.75, 0.9] {
            for idx in crate::combinatorics::lambda_sets(k).unwrap().all {
                let id = FunctionalId::G { l1: idx.l1, l2: idx.l2, m: idx.m };
                let e = catalog_entry(id, k).unwrap().predicted_exponent(hp(h));
                let want = if idx.is_zero_class() { 0.0 } else { -0.5 };
                assert!((e - want).abs() < 1e-12, "{id} {e}");
            }
        }
    }

    #[test]
    fn catalog_predictions() {
        let h = hp(0.75);
        for k in 1..4 {
            for id in catalog(k).unwrap() {
                let e = catalog_entry(id, k).unwrap().predicted_exponent(h);
                let want = match id {
                    FunctionalId::G { l1, l2, m } if l1 + l2 == m + 1 => 0.0,
                    FunctionalId::G { .. } | FunctionalId::ISharp { .. } => -0.5,
                    FunctionalId::UNorm { .. } | FunctionalId::MPrime { .. } => 0.0,
                };
                assert!((e - want).abs() < 1e-12, "{id}");
            }
        }
    }

    #[test]
    fn q_free_graph_is_theta_only() {
        let g = catalog_entry(FunctionalId::ISharp { l1: 1, l2: 1, l3: 1, m: 0 }, 1).unwrap().graphs.remove(0);
        let h = hp(0.8);
        let c = &g.components()[0];
        assert_eq!(e_q(c, h), 0.0);
        assert_eq!(exponent(&g, h), e_theta(c, h));
    }

    #[test]
    fn dv_cases() {
        let h = hp(0.7);
        let free = catalog_entry(FunctionalId::ISharp { l1: 1, l2: 1, l3: 1, m: 0 }, 1).unwrap().graphs.remove(0);
        let (b, case) = dv_exponent_bound(&free, 2, h).unwrap();
        assert_eq!(case, DvCase::QFree);
        assert!((b - (exponent(&free, h) - 0.7)).abs() < 1e-15);
        let odd = single(3, ComponentClass::Class2);
        assert_eq!(dv_exponent_bound(&odd, 4, h).unwrap().1, DvCase::OrderMismatch);
        assert_eq!(dv_exponent_bound(&odd, 3, h).unwrap().1, DvCase::General);
        assert!(dv_exponent_bound(&odd, 1, h).is_err());
    }

    #[test]
    fn annotations_are_checked() {
        let bad = WeightedGraph::new(1, vec![], vec![(HalfVertex::new(0, 1), 2)], &[Annotation { l2: 0, class: ComponentClass::QFree }]);
        assert!(matches!(bad, Err(Error::InconsistentAnnotation(_))));
        let too_many = WeightedGraph::new(1, vec![], vec![], &[Annotation { l2: 1, class: ComponentClass::QFree }]);
        assert!(too_many.is_err());
        let split = WeightedGraph::new(2, vec![], vec![], &[Annotation { l2: 0, class: ComponentClass::QFree }]);
        assert!(split.is_err());
        let kappa = WeightedGraph::new(1, vec![], vec![(HalfVertex::new(0, 3), 1)], &[Annotation { l2: 0, class: ComponentClass::Class1 }]);
        assert!(kappa.is_err());
    }

    #[test]
    fn parsing_round_trips() {
        for s in ["G(1,1;0)", "I#(1,1,1;0)", "u(1)", "M'(2)", "G(2,1;1)"] {
            assert_eq!(s.parse::<FunctionalId>().unwrap().to_string(), s);
        }
        for s in ["G(1,1)", "X(1)", "u(1;2)", "I#(1,1;0)", "G(a,1;0)"] {
            assert!(s.parse::<FunctionalId>().is_err(), "{s}");
        }
        assert!(catalog_entry(FunctionalId::ISharp { l1: 1, l2: 1, l3: 2, m: 0 }, 2).is_err());
    }

    proptest! {
        #[test]
        fn exponent_is_additive(q1 in 0u32..6, q2 in 0u32..6, t in 1u32..5, h in 0.51f64..0.99) {
            let h = hp(h);
            let a = pair_graph(t, q1, q2).unwrap();
            let b = single(q1 + 1, ComponentClass::Class1);
            let u = a.disjoint_union(&b);
            prop_assert_eq!(u.components().len(), 2);
            prop_assert!((exponent(&u, h) - exponent(&a, h) - exponent(&b, h)).abs() < 1e-12);
        }
    }
}
