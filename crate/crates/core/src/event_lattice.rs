//! Per-handler event state lattice and its micro-functions.
//!
//! A single handler moves through the chain `X ⊒ S ⊒ R ⊒ E`. Micro-functions
//! over this chain are stored as 8-bit tables; a transformer over all
//! handlers is a sparse map from handler to micro-function.

use std::cell::Cell;
use std::fmt;
use std::sync::OnceLock;

use crate::supergraph::{EventOp, HandlerId};

/// Event handler state. The discriminant is the 2-bit code, so the chain
/// order is the numeric order and meet is `min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum HState {
    /// Registered and emitted.
    E = 0,
    /// Registered, not yet emitted since registration.
    R = 1,
    /// Not registered.
    S = 2,
    /// Reached along an infeasible ordering.
    X = 3,
}

impl HState {
    pub const ALL: [HState; 4] = [HState::X, HState::S, HState::R, HState::E];

    pub fn from_code(c: u8) -> HState {
        match c & 3 {
            0 => HState::E,
            1 => HState::R,
            2 => HState::S,
            _ => HState::X,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn meet(self, other: HState) -> HState {
        self.min(other)
    }
}

impl fmt::Display for HState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            HState::X => "X",
            HState::S => "S",
            HState::R => "R",
            HState::E => "E",
        };
        f.write_str(c)
    }
}

pub fn hstate_meet(a: HState, b: HState) -> HState {
    a.meet(b)
}

/// A function on the four-state chain. The image of state `s` lives in bits
/// `2·code(s)..2·code(s)+2`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MicroFn(u8);

impl MicroFn {
    pub const ID: MicroFn = MicroFn(0b11_10_01_00);
    pub const REGISTER: MicroFn = MicroFn::from_table([HState::X, HState::R, HState::R, HState::E]);
    pub const EMIT: MicroFn = MicroFn::from_table([HState::X, HState::S, HState::E, HState::E]);
    pub const INVOKE: MicroFn = MicroFn::from_table([HState::X, HState::X, HState::X, HState::E]);

    /// Builds a function from its images of `⟨X, S, R, E⟩`.
    pub const fn from_table(t: [HState; 4]) -> MicroFn {
        MicroFn(((t[0] as u8) << 6) | ((t[1] as u8) << 4) | ((t[2] as u8) << 2) | (t[3] as u8))
    }

    pub const fn from_bits(b: u8) -> MicroFn {
        MicroFn(b)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    /// Images of `⟨X, S, R, E⟩`.
    pub fn table(self) -> [HState; 4] {
        HState::ALL.map(|s| self.apply(s))
    }

    pub fn apply(self, s: HState) -> HState {
        HState::from_code(self.0 >> (2 * s.code()))
    }

    /// `self ∘ inner`, served from the precomputed table.
    pub fn compose(self, inner: MicroFn) -> MicroFn {
        MicroFn(tables().compose[self.0 as usize][inner.0 as usize])
    }

    pub fn meet(self, other: MicroFn) -> MicroFn {
        MicroFn(tables().meet[self.0 as usize][other.0 as usize])
    }

    pub fn is_identity(self) -> bool {
        self == MicroFn::ID
    }

    pub fn is_monotone(self) -> bool {
        HState::ALL
            .iter()
            .all(|&a| HState::ALL.iter().all(|&b| a > b || self.apply(a) <= self.apply(b)))
    }

    /// All 256 functions.
    pub fn all() -> impl Iterator<Item = MicroFn> {
        (0..=255u8).map(MicroFn)
    }
}

impl fmt::Display for MicroFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.table();
        write!(f, "⟨X,S,R,E⟩→⟨{a},{b},{c},{d}⟩")
    }
}

impl fmt::Debug for MicroFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.table();
        write!(f, "⟨{a},{b},{c},{d}⟩")
    }
}

pub fn mf_apply(f: MicroFn, s: HState) -> HState {
    f.apply(s)
}

/// `g ∘ f`.
pub fn mf_compose(g: MicroFn, f: MicroFn) -> MicroFn {
    g.compose(f)
}

pub fn mf_meet(f: MicroFn, g: MicroFn) -> MicroFn {
    f.meet(g)
}

/// Composition by evaluating both functions on every state.
pub fn compose_by_definition(g: MicroFn, f: MicroFn) -> MicroFn {
    MicroFn::from_table(HState::ALL.map(|s| g.apply(f.apply(s))))
}

/// Entrywise meet by evaluating both functions on every state.
pub fn meet_by_definition(f: MicroFn, g: MicroFn) -> MicroFn {
    MicroFn::from_table(HState::ALL.map(|s| f.apply(s).meet(g.apply(s))))
}

struct Tables {
    compose: Box<[[u8; 256]; 256]>,
    meet: Box<[[u8; 256]; 256]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let t = build_tables();
        debug_assert!(check_tables(&t).is_ok());
        t
    })
}

fn field_min(a: u8, b: u8) -> u8 {
    let mut out = 0;
    for shift in [0, 2, 4, 6] {
        out |= ((a >> shift) & 3).min((b >> shift) & 3) << shift;
    }
    out
}

fn build_tables() -> Tables {
    let mut compose = Box::new([[0u8; 256]; 256]);
    let mut meet = Box::new([[0u8; 256]; 256]);
    for g in 0..256usize {
        for f in 0..256usize {
            // Image of s under g∘f: look up f's 2-bit output as an index into g.
            let mut out = 0u8;
            for shift in [0, 2, 4, 6] {
                let mid = (f as u8 >> shift) & 3;
                out |= ((g as u8 >> (2 * mid)) & 3) << shift;
            }
            compose[g][f] = out;
            meet[g][f] = field_min(g as u8, f as u8);
        }
    }
    Tables { compose, meet }
}

fn check_tables(t: &Tables) -> Result<(), String> {
    for g in MicroFn::all() {
        for f in MicroFn::all() {
            let c = MicroFn(t.compose[g.0 as usize][f.0 as usize]);
            if c != compose_by_definition(g, f) {
                return Err(format!("compose table wrong at ({g:?}, {f:?})"));
            }
            let m = MicroFn(t.meet[g.0 as usize][f.0 as usize]);
            if m != meet_by_definition(g, f) {
                return Err(format!("meet table wrong at ({g:?}, {f:?})"));
            }
        }
    }
    Ok(())
}

/// Rebuilds the compose/meet tables and compares all 256×256 entries of
/// each against the definitional computation.
pub fn verify_tables() -> Result<(), String> {
    check_tables(&build_tables())?;
    check_tables(tables())
}

/// A separable transformer over all handlers: handler → micro-function,
/// storing only non-identity entries, sorted by handler.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HandlerMicroFn {
    entries: Vec<(HandlerId, MicroFn)>,
}

impl HandlerMicroFn {
    pub fn identity() -> HandlerMicroFn {
        HandlerMicroFn::default()
    }

    pub fn single(h: HandlerId, f: MicroFn) -> HandlerMicroFn {
        let mut out = HandlerMicroFn::identity();
        if !f.is_identity() {
            out.entries.push((h, f));
        }
        out
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (HandlerId, MicroFn)>) -> HandlerMicroFn {
        let mut out = HandlerMicroFn::identity();
        for (h, f) in entries {
            out = HandlerMicroFn::single(h, f).compose(&out);
        }
        out
    }

    /// The transformer for one event operation.
    pub fn for_op(op: EventOp) -> HandlerMicroFn {
        match op {
            EventOp::Register(h) => HandlerMicroFn::single(h, MicroFn::REGISTER),
            EventOp::Emit(h) => HandlerMicroFn::single(h, MicroFn::EMIT),
            EventOp::EmitRegister(h) => HandlerMicroFn::single(h, MicroFn::EMIT.compose(MicroFn::REGISTER)),
            EventOp::Invoke(h) => HandlerMicroFn::single(h, MicroFn::INVOKE),
        }
    }

    /// The operations performed in sequence.
    pub fn for_ops(ops: &[EventOp]) -> HandlerMicroFn {
        ops.iter()
            .fold(HandlerMicroFn::identity(), |acc, &op| HandlerMicroFn::for_op(op).compose(&acc))
    }

    pub fn get(&self, h: HandlerId) -> MicroFn {
        match self.entries.binary_search_by_key(&h, |&(k, _)| k) {
            Ok(i) => self.entries[i].1,
            Err(_) => MicroFn::ID,
        }
    }

    pub fn entries(&self) -> &[(HandlerId, MicroFn)] {
        &self.entries
    }

    pub fn is_identity(&self) -> bool {
        self.entries.is_empty()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &HandlerMicroFn) -> HandlerMicroFn {
        self.compose_counted(inner).0
    }

    /// `self ∘ inner`, plus the number of handlers the merge touched.
    pub fn compose_counted(&self, inner: &HandlerMicroFn) -> (HandlerMicroFn, usize) {
        merge(&self.entries, &inner.entries, |g, f| g.compose(f))
    }

    pub fn meet(&self, other: &HandlerMicroFn) -> HandlerMicroFn {
        self.meet_counted(other).0
    }

    pub fn meet_counted(&self, other: &HandlerMicroFn) -> (HandlerMicroFn, usize) {
        merge(&self.entries, &other.entries, |a, b| a.meet(b))
    }

    pub fn apply(&self, m: &HStateMap) -> HStateMap {
        let mut out = m.clone();
        for &(h, f) in &self.entries {
            out.set(h, f.apply(m.get(h)));
        }
        out
    }

    pub fn render(&self, names: &[String]) -> String {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(h, f)| format!("{}: {f:?}", names.get(h.index()).map(String::as_str).unwrap_or("?")))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for HandlerMicroFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(h, m)| (h.0, m))).finish()
    }
}

/// Pointwise combination of two sparse maps whose absent keys mean identity.
fn merge(
    a: &[(HandlerId, MicroFn)],
    b: &[(HandlerId, MicroFn)],
    op: impl Fn(MicroFn, MicroFn) -> MicroFn,
) -> (HandlerMicroFn, usize) {
    let (mut i, mut j) = (0, 0);
    let mut entries = Vec::with_capacity(a.len() + b.len());
    let mut touched = 0;
    while i < a.len() || j < b.len() {
        touched += 1;
        let (h, f) = match (a.get(i), b.get(j)) {
            (Some(&(ha, fa)), Some(&(hb, fb))) if ha == hb => {
                i += 1;
                j += 1;
                (ha, op(fa, fb))
            }
            (Some(&(ha, fa)), Some(&(hb, _))) if ha < hb => {
                i += 1;
                (ha, op(fa, MicroFn::ID))
            }
            (Some(&(ha, fa)), None) => {
                i += 1;
                (ha, op(fa, MicroFn::ID))
            }
            (_, Some(&(hb, fb))) => {
                j += 1;
                (hb, op(MicroFn::ID, fb))
            }
            (None, None) => unreachable!(),
        };
        if !f.is_identity() {
            entries.push((h, f));
        }
    }
    (HandlerMicroFn { entries }, touched)
}

/// Handler → state, with absent handlers in the initial state `S`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HStateMap {
    entries: Vec<(HandlerId, HState)>,
}

impl HStateMap {
    /// Every handler in `S`.
    pub fn all_start() -> HStateMap {
        HStateMap::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (HandlerId, HState)>) -> HStateMap {
        let mut m = HStateMap::default();
        for (h, s) in entries {
            m.set(h, s);
        }
        m
    }

    pub fn get(&self, h: HandlerId) -> HState {
        match self.entries.binary_search_by_key(&h, |&(k, _)| k) {
            Ok(i) => self.entries[i].1,
            Err(_) => HState::S,
        }
    }

    pub fn set(&mut self, h: HandlerId, s: HState) {
        match (self.entries.binary_search_by_key(&h, |&(k, _)| k), s) {
            (Ok(i), HState::S) => {
                self.entries.remove(i);
            }
            (Ok(i), s) => self.entries[i].1 = s,
            (Err(_), HState::S) => {}
            (Err(i), s) => self.entries.insert(i, (h, s)),
        }
    }

    pub fn meet(&self, other: &HStateMap) -> HStateMap {
        let mut out = self.clone();
        let keys: Vec<HandlerId> = self.entries.iter().chain(&other.entries).map(|&(h, _)| h).collect();
        for h in keys {
            out.set(h, self.get(h).meet(other.get(h)));
        }
        out
    }

    /// Handlers mapped to `X`.
    pub fn infeasible(&self) -> Vec<HandlerId> {
        self.entries
            .iter()
            .filter(|&&(_, s)| s == HState::X)
            .map(|&(h, _)| h)
            .collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.infeasible().is_empty()
    }

    /// `{h1: E, h2: S}` over every handler in `names`.
    pub fn render(&self, names: &[String]) -> String {
        let parts: Vec<String> = names
            .iter()
            .enumerate()
            .map(|(i, n)| format!("{n}: {}", self.get(HandlerId(i as u32))))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for HStateMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(h, s)| (h.0, s))).finish()
    }
}

pub fn hmf_apply(f: &HandlerMicroFn, m: &HStateMap) -> HStateMap {
    f.apply(m)
}

pub fn hmf_compose(g: &HandlerMicroFn, f: &HandlerMicroFn) -> HandlerMicroFn {
    g.compose(f)
}

pub fn hmf_meet(f: &HandlerMicroFn, g: &HandlerMicroFn) -> HandlerMicroFn {
    f.meet(g)
}

pub fn hmf_equal(f: &HandlerMicroFn, g: &HandlerMicroFn) -> bool {
    f == g
}

/// Counters for transformer operations performed by a solver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct OpStats {
    pub compositions: usize,
    pub meets: usize,
    /// Largest number of handlers visited by a single composition or meet.
    pub max_touched: usize,
    pub total_touched: usize,
}

#[derive(Debug, Default)]
pub(crate) struct OpCounter(Cell<OpStats>);

impl OpCounter {
    pub(crate) fn record(&self, compose: bool, touched: usize) {
        let mut s = self.0.get();
        if compose {
            s.compositions += 1;
        } else {
            s.meets += 1;
        }
        s.max_touched = s.max_touched.max(touched);
        s.total_touched += touched;
        self.0.set(s);
    }

    pub(crate) fn get(&self) -> OpStats {
        self.0.get()
    }

    pub(crate) fn reset(&self) {
        self.0.set(OpStats::default());
    }
}
