use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{open_unit, ActionId, Outcome, OutcomeDist, StateId, Transition};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Social reward carried by the single bad action.
pub const BAD_SOCIAL_REWARD: f64 = -100.0;

/// Actions per intermediate state in the deterministic variant.
const DETERMINISTIC_BRANCHING: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayeredVariant {
    /// Four deterministic actions per intermediate state, targets drawn at
    /// generation time.
    Deterministic,
    /// Two actions with two random targets and random outcome probabilities.
    Stochastic,
    /// Two actions with even splits onto neighbouring states (indices mod n).
    Regular,
}

impl LayeredVariant {
    pub fn number(self) -> u8 {
        match self {
            LayeredVariant::Deterministic => 1,
            LayeredVariant::Stochastic => 2,
            LayeredVariant::Regular => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(LayeredVariant::Deterministic),
            2 => Some(LayeredVariant::Stochastic),
            3 => Some(LayeredVariant::Regular),
            _ => None,
        }
    }

    pub const ALL: [LayeredVariant; 3] = [
        LayeredVariant::Deterministic,
        LayeredVariant::Stochastic,
        LayeredVariant::Regular,
    ];
}

/// Layered loop environment: one root state, then `levels` levels of `width`
/// states each. Every walk goes root → level 1 → … → level m → root.
///
/// State 0 is the root; state `1 + (l - 1) * width + j` is the j-th state of
/// level `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovEnv {
    pub(super) variant: LayeredVariant,
    pub(super) levels: usize,
    pub(super) width: usize,
    pub(super) actions: Vec<Vec<OutcomeDist>>,
    pub(super) bad: (StateId, ActionId),
}

impl MarkovEnv {
    pub fn variant(&self) -> LayeredVariant {
        self.variant
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    pub fn n_actions(&self, s: StateId) -> usize {
        self.actions.get(s).map_or(0, Vec::len)
    }

    pub fn actions_per_state(&self) -> Vec<usize> {
        self.actions.iter().map(Vec::len).collect()
    }

    pub fn root(&self) -> StateId {
        0
    }

    pub fn state_at(&self, level: usize, index: usize) -> StateId {
        debug_assert!(level >= 1 && level <= self.levels && index < self.width);
        1 + (level - 1) * self.width + index
    }

    /// Level of a state, 0 for the root.
    pub fn level_of(&self, s: StateId) -> usize {
        if s == 0 {
            0
        } else {
            (s - 1) / self.width + 1
        }
    }

    pub fn is_last_level(&self, s: StateId) -> bool {
        self.level_of(s) == self.levels
    }

    /// The (state, action) pair carrying the negative social reward.
    pub fn bad_action(&self) -> (StateId, ActionId) {
        self.bad
    }

    pub fn is_bad(&self, s: StateId, a: ActionId) -> bool {
        (s, a) == self.bad
    }

    pub fn dist(&self, s: StateId, a: ActionId) -> Result<&OutcomeDist> {
        self.actions
            .get(s)
            .and_then(|acts| acts.get(a))
            .ok_or_else(|| {
                Error::ContractViolation(format!(
                    "action {a} is not available in state {s} of a {}-state environment",
                    self.n_states()
                ))
            })
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        s: StateId,
        a: ActionId,
        rng: &mut R,
    ) -> Result<Transition> {
        Ok(self.dist(s, a)?.sample(rng).into())
    }

    pub(crate) fn step_unchecked<R: Rng + ?Sized>(
        &self,
        s: StateId,
        a: ActionId,
        rng: &mut R,
    ) -> Transition {
        self.actions[s][a].sample(rng).into()
    }

    pub fn all_outcomes(&self) -> impl Iterator<Item = (StateId, ActionId, &Outcome)> {
        self.actions.iter().enumerate().flat_map(|(s, acts)| {
            acts.iter()
                .enumerate()
                .flat_map(move |(a, d)| d.outcomes().iter().map(move |o| (s, a, o)))
        })
    }

    /// Checks every structural invariant of the layered construction.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Construction(msg));
        if self.levels < 2 || self.width < 2 {
            return fail(format!(
                "levels = {} and width = {} must both be at least 2",
                self.levels, self.width
            ));
        }
        if self.n_states() != 1 + self.levels * self.width {
            return fail(format!("expected {} states", 1 + self.levels * self.width));
        }
        let mut bad_pairs = 0;
        for (s, acts) in self.actions.iter().enumerate() {
            let level = self.level_of(s);
            let expected_actions = match level {
                0 => self.width,
                l if l == self.levels => 1,
                _ => match self.variant {
                    LayeredVariant::Deterministic => DETERMINISTIC_BRANCHING,
                    _ => 2,
                },
            };
            if acts.len() != expected_actions {
                return fail(format!(
                    "state {s} on level {level} has {} actions, expected {expected_actions}",
                    acts.len()
                ));
            }
            for (a, dist) in acts.iter().enumerate() {
                dist.validate()?;
                let expected_outcomes = match (level, self.variant) {
                    (0, _) => 1,
                    (l, _) if l == self.levels => 1,
                    (_, LayeredVariant::Deterministic) => 1,
                    _ => 2,
                };
                if dist.len() != expected_outcomes {
                    return fail(format!(
                        "({s}, {a}) has {} outcomes, expected {expected_outcomes}",
                        dist.len()
                    ));
                }
                for o in dist.outcomes() {
                    let next_level = self.level_of(o.next);
                    let want = if level == self.levels { 0 } else { level + 1 };
                    if o.next >= self.n_states() || next_level != want {
                        return fail(format!("({s}, {a}) leads to state {} off the loop", o.next));
                    }
                    if !(o.r1 > 0.0 && o.r1 < 1.0) {
                        return fail(format!("somatic reward {} outside (0, 1)", o.r1));
                    }
                    if o.r2 != 0.0 {
                        if o.r2 != BAD_SOCIAL_REWARD || (s, a) != self.bad {
                            return fail(format!(
                                "unexpected social reward {} at ({s}, {a})",
                                o.r2
                            ));
                        }
                        bad_pairs += 1;
                    }
                }
                if level == 0 && dist.outcomes()[0].next != self.state_at(1, a) {
                    return fail(format!("root action {a} must lead to level-1 state {a}"));
                }
            }
        }
        if bad_pairs != 1 || self.bad != (self.state_at(self.levels, 0), 0) {
            return fail(
                "exactly one bad action, on the first last-level state, is required".into(),
            );
        }
        Ok(())
    }
}

fn level_state(width: usize, level: usize, index: usize) -> StateId {
    1 + (level - 1) * width + index
}

fn single<R: Rng + ?Sized>(next: StateId, rng: &mut R) -> OutcomeDist {
    OutcomeDist {
        outcomes: vec![Outcome {
            next,
            prob: 1.0,
            r1: open_unit(rng),
            r2: 0.0,
        }],
    }
}

fn pair<R: Rng + ?Sized>(a: StateId, b: StateId, p: f64, rng: &mut R) -> OutcomeDist {
    let ra = open_unit(rng);
    let rb = open_unit(rng);
    OutcomeDist {
        outcomes: vec![
            Outcome {
                next: a,
                prob: p,
                r1: ra,
                r2: 0.0,
            },
            Outcome {
                next: b,
                prob: 1.0 - p,
                r1: rb,
                r2: 0.0,
            },
        ],
    }
}

/// Builds a layered loop environment with `levels` levels of `width` states.
pub fn generate_layered_env(
    variant: LayeredVariant,
    levels: usize,
    width: usize,
    seed: u64,
) -> Result<MarkovEnv> {
    if levels < 2 {
        return Err(Error::Construction(format!(
            "levels must be >= 2, got {levels}"
        )));
    }
    if width < 2 {
        return Err(Error::Construction(format!(
            "width must be >= 2, got {width}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut actions = Vec::with_capacity(1 + levels * width);

    actions.push(
        (0..width)
            .map(|j| single(level_state(width, 1, j), &mut rng))
            .collect(),
    );
    for level in 1..=levels {
        for j in 0..width {
            let acts: Vec<OutcomeDist> = if level == levels {
                vec![single(0, &mut rng)]
            } else {
                let next = |k: usize| level_state(width, level + 1, k);
                match variant {
                    LayeredVariant::Deterministic => (0..DETERMINISTIC_BRANCHING)
                        .map(|_| {
                            let k = rng.gen_range(0..width);
                            single(next(k), &mut rng)
                        })
                        .collect(),
                    LayeredVariant::Stochastic => (0..2)
                        .map(|_| {
                            let picked = sample_indices(&mut rng, width, 2);
                            let p = open_unit(&mut rng);
                            pair(next(picked.index(0)), next(picked.index(1)), p, &mut rng)
                        })
                        .collect(),
                    LayeredVariant::Regular => {
                        let left = (j + width - 1) % width;
                        let right = (j + 1) % width;
                        vec![
                            pair(next(left), next(j), 0.5, &mut rng),
                            pair(next(j), next(right), 0.5, &mut rng),
                        ]
                    }
                }
            };
            actions.push(acts);
        }
    }

    let bad = (level_state(width, levels, 0), 0);
    actions[bad.0][bad.1].outcomes[0].r2 = BAD_SOCIAL_REWARD;

    let env = MarkovEnv {
        variant,
        levels,
        width,
        actions,
        bad,
    };
    debug_assert!(env.validate().is_ok());
    Ok(env)
}

/// Redraws every somatic reward uniformly from (0, 1), leaving transitions
/// and social rewards untouched.
pub fn randomize_somatic_rewards(env: &MarkovEnv, seed: u64) -> MarkovEnv {
    let mut rng = rng_from_seed(seed);
    let mut out = env.clone();
    for acts in &mut out.actions {
        for dist in acts {
            for o in dist.outcomes_mut() {
                o.r1 = open_unit(&mut rng);
            }
        }
    }
    out
}
