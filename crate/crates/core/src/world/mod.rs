//! Declarative text-game worlds.
//!
//! A world is a graph of places joined by (optionally flag-guarded) exits,
//! a set of objects, and action rules with preconditions, effects and
//! rewards. The engine is a pure function of `(world, state, action)`:
//! candidate order depends only on the state and the episode seed, so a
//! fixed seed and action sequence always yields the same trajectory.
//!
//! The JSON schema is documented in `worlds/README.md`.

mod engine;
mod graph;
mod spec;

pub use engine::{
    candidates, replay_walkthrough, reset, step, Engine, GameState, Observation, StepOutcome,
    DEFAULT_STEPS_PER_EPISODE, NOTHING_HAPPENS,
};
pub use graph::{place_depths, Depth};
pub use spec::{
    load_world, ActionRule, Effects, Exit, GameObject, Place, Preconditions, RewardSpec, WorldSpec,
    ANY_PLACE, INVENTORY, NOWHERE,
};

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("world file does not parse: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("dangling {kind} reference `{id}` in {context}")]
    Dangling {
        kind: &'static str,
        id: String,
        context: String,
    },
    #[error("walkthrough step {index} (`{action}`) does nothing")]
    Walkthrough { index: usize, action: String },
    #[error("walkthrough scores {score} but max_score is {max_score}")]
    WalkthroughScore { score: i64, max_score: i64 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn window_world() -> serde_json::Value {
        json!({
            "id": "window",
            "start_place": "yard",
            "max_score": 10,
            "places": [
                {"id": "yard", "description": "You are behind a white house.",
                 "exits": {"north": "path"}},
                {"id": "path", "description": "A forest path.",
                 "exits": {"south": "yard", "east": {"to": "clearing", "guard": "cleared"}}},
                {"id": "clearing", "description": "A clearing.", "exits": {"west": "path"}},
                {"id": "island", "description": "Unreachable.", "exits": {}}
            ],
            "objects": [{"id": "leaflet", "name": "a leaflet", "portable": true, "initial_place": "yard"}],
            "rules": [
                {"text": "open window", "preconditions": {"place": "yard"},
                 "effects": {"set_flags": ["window_open"], "text": "With great effort, you open the window."},
                 "reward": {"id": "window", "points": 10, "once": true}},
                {"text": "clear brush", "preconditions": {"place": "path"},
                 "effects": {"set_flags": ["cleared"]}},
                {"text": "take leaflet", "preconditions": {"place": "yard"},
                 "effects": {"take": ["leaflet"]}}
            ],
            "walkthrough": ["open window"],
            "distractors": {"yard": ["wait", "sing"]}
        })
    }

    fn load(v: serde_json::Value) -> Result<WorldSpec, WorldError> {
        WorldSpec::from_json(&v.to_string())
    }

    #[test]
    fn once_reward_then_zero() {
        let world = load(window_world()).unwrap();
        let (s0, _) = reset(&world, 7);
        let out = step(&world, &s0, "Open Window");
        assert_eq!(out.reward, 10);
        assert!(out.state.flags.contains("window_open"));
        assert!(out.observation.text.ends_with("you open the window."));
        let again = step(&world, &out.state, "open window");
        assert_eq!(again.reward, 0);
        assert_eq!(again.state.score, 10);
    }

    #[test]
    fn gibberish_is_a_costed_noop() {
        let world = load(window_world()).unwrap();
        let (s0, _) = reset(&world, 7);
        let out = step(&world, &s0, "xyzzy quux");
        assert_eq!(out.reward, 0);
        assert!(!out.applied);
        assert_eq!(out.state.step, 1);
        assert_eq!((&out.state.place, &out.state.flags, &out.state.inventory, out.state.score),
                   (&s0.place, &s0.flags, &s0.inventory, s0.score));
        assert!(out.observation.text.ends_with(NOTHING_HAPPENS));
    }

    #[test]
    fn guarded_exit_needs_flag() {
        let world = load(window_world()).unwrap();
        let (s0, _) = reset(&world, 0);
        let s1 = step(&world, &s0, "go north").state;
        assert_eq!(s1.place, "path");
        assert!(!step(&world, &s1, "go east").applied);
        let s2 = step(&world, &s1, "clear brush").state;
        assert_eq!(step(&world, &s2, "east").state.place, "clearing");
    }

    #[test]
    fn reset_is_deterministic_and_seed_only_reorders() {
        let world = load(window_world()).unwrap();
        let (a, oa) = reset(&world, 7);
        let (b, ob) = reset(&world, 7);
        assert_eq!((a.clone(), oa.clone()), (b, ob));
        assert_eq!(a.place, "yard");
        assert_eq!(a.score, 0);
        let orders: std::collections::BTreeSet<Vec<String>> =
            (0..16).map(|s| reset(&world, s).1.candidates).collect();
        assert!(orders.len() > 1, "seed should permute candidates");
        for order in &orders {
            let mut sorted = order.clone();
            sorted.sort();
            let mut base = oa.candidates.clone();
            base.sort();
            assert_eq!(sorted, base);
        }
    }

    #[test]
    fn candidate_counting_and_dedup() {
        let world = load(json!({
            "id": "count", "start_place": "a", "max_score": 0,
            "places": [{"id": "a", "description": "A."}, {"id": "b", "description": "B."}],
            "rules": [
                {"text": "x", "preconditions": {"place": "a"}},
                {"text": "y", "preconditions": {"place": "a"}},
                {"text": "z", "preconditions": {"place": "a"}},
                {"text": "Z", "preconditions": {"place": "a", "flags": []}}
            ],
            "distractors": {"a": ["wait", "sing", "x"]}
        }))
        .unwrap();
        let (s, obs) = reset(&world, 1);
        assert_eq!(obs.candidates.len(), 5);
        assert_eq!(candidates(&world, &s), obs.candidates);
        let mut b = s.clone();
        b.place = "b".into();
        assert!(candidates(&world, &b).is_empty());
    }

    #[test]
    fn empty_candidate_set_ends_episode() {
        let world = load(json!({
            "id": "trap", "start_place": "a", "max_score": 0,
            "places": [{"id": "a", "description": "A.", "exits": {"down": "pit"}},
                       {"id": "pit", "description": "A pit."}]
        }))
        .unwrap();
        let (s, _) = reset(&world, 0);
        assert!(step(&world, &s, "go down").done);
    }

    #[test]
    fn step_cap_ends_episode() {
        let world = load(window_world()).unwrap();
        let engine = Engine::new(&world, 3);
        let (mut s, _) = engine.reset(0);
        let mut dones = vec![];
        for _ in 0..3 {
            let out = engine.step(&s, "wait");
            dones.push(out.done);
            s = out.state;
        }
        assert_eq!(dones, [false, false, true]);
    }

    #[test]
    fn validation_errors() {
        let mut v = window_world();
        v["places"][0]["exits"]["west"] = json!("cellar");
        let err = load(v).unwrap_err();
        assert!(matches!(&err, WorldError::Dangling { id, .. } if id == "cellar"), "{err}");
        assert!(err.to_string().contains("cellar"));

        let mut v = window_world();
        v["places"] = json!([]);
        assert!(matches!(load(v), Err(WorldError::Invalid(_))));

        let mut v = window_world();
        v["walkthrough"] = json!(["open window", "opne door"]);
        assert!(matches!(load(v), Err(WorldError::Walkthrough { index: 1, .. })));

        let mut v = window_world();
        v["max_score"] = json!(20);
        assert!(matches!(load(v), Err(WorldError::Invalid(_))));

        let mut v = window_world();
        v["rules"][0]["reward"]["points"] = json!(-1);
        assert!(matches!(load(v), Err(WorldError::Invalid(_))));

        let mut v = window_world();
        v["start_place"] = json!("nowhere-land");
        assert!(matches!(load(v), Err(WorldError::Dangling { .. })));

        assert!(matches!(WorldSpec::from_json("{"), Err(WorldError::Parse(_))));
    }

    #[test]
    fn walkthrough_replay() {
        let world = load(window_world()).unwrap();
        let (score, traj) = replay_walkthrough(&world).unwrap();
        assert_eq!(score, 10);
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.steps[0].action(), Some("open window"));

        let mut empty = world.clone();
        empty.walkthrough.clear();
        let (score, traj) = replay_walkthrough(&empty).unwrap();
        assert_eq!(score, 0);
        assert!(traj.is_empty());

        let mut typo = world.clone();
        typo.walkthrough = vec!["open windwo".into()];
        assert!(matches!(replay_walkthrough(&typo), Err(WorldError::Walkthrough { index: 0, .. })));
    }

    #[test]
    fn depths_bfs() {
        let world = load(window_world()).unwrap();
        let d = place_depths(&world);
        assert_eq!(d["yard"], Depth::Reachable(0));
        assert_eq!(d["path"], Depth::Reachable(1));
        // guards are ignored
        assert_eq!(d["clearing"], Depth::Reachable(2));
        assert_eq!(d["island"], Depth::Unreachable);
    }

    #[test]
    fn take_moves_object_out_of_view() {
        let world = load(window_world()).unwrap();
        let (s, obs) = reset(&world, 0);
        assert!(obs.text.contains("a leaflet"));
        let out = step(&world, &s, "take leaflet");
        assert!(out.state.inventory.contains("leaflet"));
        assert!(!out.observation.text.contains("You see"));
    }
}
