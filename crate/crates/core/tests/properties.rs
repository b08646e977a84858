mod common;

use proptest::prelude::*;
use retrofit::analysis::{elasticity, Param, Scenario, Target};
use retrofit::params::validate;
use retrofit::stochastic::hitting_cdf;
use retrofit::subsidy::{optimal_subsidy, PlannerParams};
use retrofit::welfare::{equivalent_variation, social_cost, SocialParams};
use retrofit::{Agent, Regime};

fn household() -> impl Strategy<Value = Agent> {
    proptest::collection::vec(0.0f64..1.0, 24).prop_filter_map("no finite threshold", |us| {
        let mut it = us.into_iter().cycle();
        let p = common::draw_params(|| it.next().unwrap());
        if !validate(&p).passed() {
            return None;
        }
        Agent::new(p).ok().filter(|a| a.consts.theta < 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn identities_hold(agent in household()) {
        for r in common::residuals(&agent) {
            prop_assert!(r < 1e-9, "{r}");
        }
    }

    #[test]
    fn value_orders(agent in household(), k in 0.01f64..0.99) {
        let w = k * agent.consts.w_star().unwrap();
        prop_assume!(agent.disposable(w) > 0.0 && w + agent.consts.h_tilde > 0.0);
        let f = agent.primal_value(w).unwrap();
        // far below the threshold the option is worth less than rounding
        let slack = 1e-12 * f.abs();
        prop_assert!(f >= agent.terminal_gain(w).unwrap() - slack);
        prop_assert!(f >= agent.counterfactual_value(w).unwrap() - slack);
        // the log round trip loses a few ulps of z
        prop_assert!(equivalent_variation(&agent, w).unwrap() >= -1e-10 * agent.disposable(w));
    }

    #[test]
    fn social_cost_is_nonpositive(agent in household(), k in 0.01f64..1.5, carbon in 10.0f64..70.0) {
        let social = SocialParams::case_study().with_carbon_price(carbon);
        let z = k * agent.consts.z_star().unwrap();
        if let Ok(v) = social_cost(&agent, &social, z, social.pi0()) {
            prop_assert!(v <= 0.0);
        }
    }

    #[test]
    fn waiting_subsidy_is_admissible(agent in household(), k in 0.0f64..0.99) {
        let w = k * agent.consts.w_star().unwrap();
        prop_assume!(agent.regime_at(w) == Regime::Waiting);
        let pl = PlannerParams::case_study();
        if let Ok(r) = optimal_subsidy(&agent, w, pl.social.pi0(), &pl) {
            prop_assert!(r.m_star >= 0.0 && r.m_star <= agent.consts.m_bar + 1e-12);
        }
    }

    #[test]
    fn loan_and_cost_elasticities_coincide(agent in household()) {
        let s = Scenario { model: agent.params, planner: PlannerParams::case_study() };
        let rho = elasticity(Target::WStar, Param::Rho, &s).unwrap().value;
        let cost = elasticity(Target::WStar, Param::Cost, &s).unwrap().value;
        prop_assert!((rho - cost).abs() <= 1e-10 * rho.abs().max(1.0));
    }

    #[test]
    fn passage_law_is_monotone(z in 0.1f64..1.0, mu in -0.05f64..0.05, s in 0.05f64..0.4, t in 0.0f64..50.0, dt in 0.0f64..5.0) {
        let a = hitting_cdf(z, 1.0, mu, s, t);
        let b = hitting_cdf(z, 1.0, mu, s, t + dt);
        prop_assert!((0.0..=1.0).contains(&a) && b >= a);
    }
}
