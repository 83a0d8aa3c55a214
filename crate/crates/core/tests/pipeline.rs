use std::collections::BTreeMap;

use hjq_core::canonical::{build_hjpde_set, hessian, CanonicalSystem};
use hjq_core::integrability::{action_one_form, check_integrability, constraint_closure, total_differential, ClosureStatus};
use hjq_core::models::builtins;
use hjq_core::pathint::emit_path_integral;
use hjq_core::symcore::{RatFun, Symbol};

fn systems() -> Vec<CanonicalSystem> {
    builtins().iter().map(|m| build_hjpde_set(&m.definition()).unwrap()).collect()
}

/// `p_i -> dL/d dq_i` for every coordinate.
fn momenta_as_velocities(cs: &CanonicalSystem) -> BTreeMap<Symbol, RatFun> {
    let t = cs.table();
    (0..t.coordinate_count()).map(|i| (t.momentum(i).clone(), cs.momenta[t.coordinate(i)].clone())).collect()
}

fn is_regular(cs: &CanonicalSystem) -> bool {
    cs.hessian.rank == cs.table().coordinate_count()
}

#[test]
fn hessian_is_symmetric_and_partition_stable() {
    for cs in systems() {
        assert!(cs.hessian.matrix.is_symmetric(), "{}", cs.model.name());
        let again = hessian(&cs.model);
        assert_eq!(again.expressible, cs.hessian.expressible);
        assert_eq!(again.unexpressible, cs.hessian.unexpressible);
    }
}

#[test]
fn hamiltonian_is_velocity_free_and_momenta_consistent() {
    for cs in systems() {
        let t = cs.table();
        for i in 0..t.coordinate_count() {
            assert!(cs.h0.derivative(t.velocity(i)).is_zero());
        }
        for &a in &cs.hessian.expressible {
            let residual = RatFun::symbol(t.momentum(a)).sub(&cs.momenta[t.coordinate(a)]);
            assert!(residual.substitute(&cs.solved_velocities).unwrap().is_zero(), "{}", cs.model.name());
        }
    }
}

#[test]
fn legendre_consistency_for_regular_models() {
    let mut checked = 0;
    for cs in systems().into_iter().filter(is_regular) {
        let t = cs.table();
        let mut e = cs.h0.neg();
        for i in 0..t.coordinate_count() {
            let p = t.momentum(i);
            e = e.add(&RatFun::symbol(p).mul(&cs.h0.derivative(p)));
        }
        let back = e.substitute(&momenta_as_velocities(&cs)).unwrap();
        assert_eq!(&back, cs.model.lagrangian_ratfun());
        checked += 1;
    }
    assert_eq!(checked, 1);
}

#[test]
fn regular_total_differentials_are_hamilton_equations() {
    for cs in systems().into_iter().filter(is_regular) {
        let t = cs.table();
        for i in 0..t.coordinate_count() {
            let (q, p) = (t.coordinate(i), t.momentum(i));
            let dq = total_differential(&RatFun::symbol(q), &cs).unwrap();
            let dp = total_differential(&RatFun::symbol(p), &cs).unwrap();
            assert_eq!(dq.terms.len(), 1);
            assert_eq!(dq.coefficient(t.tau()), cs.h0.derivative(p));
            assert_eq!(dp.coefficient(t.tau()), cs.h0.derivative(q).neg());
        }
    }
}

#[test]
fn action_form_reproduces_lagrangian() {
    for cs in systems() {
        let form = action_one_form(&cs);
        let t = cs.table();
        // dZ/dtau along a trajectory with dq_mu/dtau = dq_mu
        let mut rate = form.coefficient(t.tau());
        for g in cs.generators.iter().skip(1) {
            let i = t.coordinate_index(&g.time).unwrap();
            rate = rate.add(&form.coefficient(&g.time).mul(&RatFun::symbol(t.velocity(i))));
        }
        let back = rate.substitute(&momenta_as_velocities(&cs)).unwrap();
        assert_eq!(&back, cs.model.lagrangian_ratfun(), "{}", cs.model.name());
        for g in cs.generators.iter().skip(1).filter(|g| g.h.is_zero()) {
            assert!(form.coefficient(&g.time).is_zero());
        }
    }
}

#[test]
fn closure_terminates_within_budget_with_independent_constraints() {
    for cs in systems() {
        let n = cs.table().coordinate_count();
        let r = constraint_closure(&cs).unwrap();
        assert!(r.generations.len() <= 2 * n);
        assert_ne!(r.status, ClosureStatus::BudgetExceeded);
        for c in r.constraints() {
            assert!(!c.expression.is_zero());
            let prior: Vec<_> = r.constraints().take_while(|d| d.label != c.label).cloned().collect();
            assert!(!prior.iter().any(|d| d.expression == c.expression || d.expression == c.expression.neg()));
        }
        if r.status == ClosureStatus::Integrable {
            let pending = check_integrability(&cs, &r.generations.concat()).unwrap();
            assert!(pending.is_empty(), "{}: {pending:?}", cs.model.name());
        }
    }
}

#[test]
fn path_integral_partition_and_determinism() {
    for cs in systems() {
        let r = constraint_closure(&cs).unwrap();
        let Ok(spec) = emit_path_integral(&cs, &r) else {
            assert_ne!(r.status, ClosureStatus::Integrable);
            continue;
        };
        let t = cs.table();
        let mut covered: Vec<&Symbol> = spec.integration_variables.iter().map(|(q, _)| q).collect();
        covered.extend(cs.generators.iter().skip(1).map(|g| &g.time));
        covered.sort();
        let mut coords: Vec<&Symbol> = t.coordinates().collect();
        coords.sort();
        assert_eq!(covered, coords);
        assert_eq!(spec.parameter_variables, r.independent_parameters);
        let again = emit_path_integral(&cs, &constraint_closure(&cs).unwrap()).unwrap();
        assert_eq!(again.formula(), spec.formula());
        let tau = spec.integrand.coefficient(t.tau());
        assert_eq!(&tau.substitute(&momenta_as_velocities(&cs)).unwrap(), cs.model.lagrangian_ratfun());
    }
}
