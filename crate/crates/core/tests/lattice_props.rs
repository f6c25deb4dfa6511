use evflow::event_lattice::{HState, HStateMap, HandlerMicroFn, MicroFn};
use evflow::supergraph::{EventOp, HandlerId};
use proptest::prelude::*;

fn states() -> impl Strategy<Value = HState> {
    (0u8..4).prop_map(HState::from_code)
}

fn micro() -> impl Strategy<Value = MicroFn> {
    any::<u8>().prop_map(MicroFn::from_bits)
}

fn hmf(max_h: u32) -> impl Strategy<Value = HandlerMicroFn> {
    prop::collection::vec((0..max_h, micro()), 0..6)
        .prop_map(|v| HandlerMicroFn::from_entries(v.into_iter().map(|(h, f)| (HandlerId(h), f))))
}

fn hmap(max_h: u32) -> impl Strategy<Value = HStateMap> {
    prop::collection::vec((0..max_h, states()), 0..6)
        .prop_map(|v| HStateMap::from_entries(v.into_iter().map(|(h, s)| (HandlerId(h), s))))
}

fn op(max_h: u32) -> impl Strategy<Value = EventOp> {
    (0..4u8, 0..max_h).prop_map(|(k, h)| {
        let h = HandlerId(h);
        match k {
            0 => EventOp::Register(h),
            1 => EventOp::Emit(h),
            2 => EventOp::EmitRegister(h),
            _ => EventOp::Invoke(h),
        }
    })
}

#[test]
fn order_is_x_s_r_e() {
    use HState::*;
    assert!(E < R && R < S && S < X);
    for a in HState::ALL {
        for b in HState::ALL {
            assert_eq!(a.meet(b), a.min(b));
        }
    }
}

#[test]
fn compose_is_associative() {
    for f in MicroFn::all() {
        for g in MicroFn::all() {
            let fg = f.compose(g);
            for h in MicroFn::all() {
                assert_eq!(fg.compose(h), f.compose(g.compose(h)));
            }
        }
    }
}

#[test]
fn meet_is_a_semilattice() {
    for f in MicroFn::all() {
        assert_eq!(f.meet(f), f);
        for g in MicroFn::all() {
            let fg = f.meet(g);
            assert_eq!(fg, g.meet(f));
            for h in MicroFn::all() {
                assert_eq!(fg.meet(h), f.meet(g.meet(h)));
            }
        }
    }
}

#[test]
fn composition_distributes_over_meet() {
    for f in MicroFn::all() {
        for g in MicroFn::all() {
            let fg = f.meet(g);
            for h in MicroFn::all() {
                assert_eq!(fg.compose(h), f.compose(h).meet(g.compose(h)));
                if h.is_monotone() {
                    assert_eq!(h.compose(fg), h.compose(f).meet(h.compose(g)));
                }
            }
        }
    }
}

#[test]
fn identity_is_neutral() {
    for f in MicroFn::all() {
        assert_eq!(f.compose(MicroFn::ID), f);
        assert_eq!(MicroFn::ID.compose(f), f);
    }
}

#[test]
fn monotone_count() {
    // Monotone maps on a 4-chain: C(7, 4).
    assert_eq!(MicroFn::all().filter(|f| f.is_monotone()).count(), 35);
}

#[test]
fn door_sequence() {
    let (open, close) = (HandlerId(0), HandlerId(1));
    let path = [EventOp::Register(open), EventOp::Emit(open), EventOp::Invoke(open)];
    let m = HandlerMicroFn::for_ops(&path).apply(&HStateMap::all_start());
    assert_eq!(m.get(open), HState::E);
    assert_eq!(m.get(close), HState::S);
    let m = HandlerMicroFn::for_op(EventOp::Invoke(close)).apply(&m);
    assert_eq!(m.get(close), HState::X);
    assert!(!m.is_feasible());
    assert_eq!(m.infeasible(), vec![close]);
}

proptest! {
    #[test]
    fn hmf_compose_is_pointwise(g in hmf(5), f in hmf(5)) {
        let c = g.compose(&f);
        for h in 0..6 {
            let h = HandlerId(h);
            prop_assert_eq!(c.get(h), g.get(h).compose(f.get(h)));
        }
        prop_assert!(c.entries().iter().all(|e| !e.1.is_identity()));
    }

    #[test]
    fn hmf_meet_is_pointwise(a in hmf(5), b in hmf(5)) {
        let m = a.meet(&b);
        for h in 0..6 {
            let h = HandlerId(h);
            prop_assert_eq!(m.get(h), a.get(h).meet(b.get(h)));
        }
        prop_assert_eq!(m, b.meet(&a));
    }

    #[test]
    fn hmf_apply_is_pointwise(f in hmf(5), m in hmap(5)) {
        let out = f.apply(&m);
        for h in 0..6 {
            let h = HandlerId(h);
            prop_assert_eq!(out.get(h), f.get(h).apply(m.get(h)));
        }
    }

    #[test]
    fn hmf_identity_is_neutral(f in hmf(5)) {
        let id = HandlerMicroFn::identity();
        prop_assert_eq!(f.compose(&id), f.clone());
        prop_assert_eq!(id.compose(&f), f);
    }

    #[test]
    fn hmf_compose_is_associative(a in hmf(4), b in hmf(4), c in hmf(4)) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
    }

    #[test]
    fn apply_respects_composition(g in hmf(4), f in hmf(4), m in hmap(4)) {
        prop_assert_eq!(g.compose(&f).apply(&m), g.apply(&f.apply(&m)));
    }

    #[test]
    fn op_sequences_match_stepwise_application(ops in prop::collection::vec(op(3), 0..12)) {
        let mut m = HStateMap::all_start();
        for &o in &ops {
            m = HandlerMicroFn::for_op(o).apply(&m);
        }
        prop_assert_eq!(HandlerMicroFn::for_ops(&ops).apply(&HStateMap::all_start()), m);
    }

    #[test]
    fn touched_handlers_bounded(g in hmf(5), f in hmf(5)) {
        let (_, n) = g.compose_counted(&f);
        prop_assert!(n <= g.entries().len() + f.entries().len());
        prop_assert!(n <= 5);
    }

    #[test]
    fn map_meet_is_pointwise(a in hmap(5), b in hmap(5)) {
        let m = a.meet(&b);
        for h in 0..6 {
            let h = HandlerId(h);
            prop_assert_eq!(m.get(h), a.get(h).meet(b.get(h)));
        }
    }
}
