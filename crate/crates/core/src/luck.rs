//! `(k, n)`-luck games and the sharpness strategy on their independent set game.
//!
//! Questions are labelled `1..=kn` (index `x - 1`), the single answer `1`.
//! All values here are exact.

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::algebra::Tolerance;
use crate::games::{Distribution, Predicate, SynchronousGame};
use crate::indepset::{self, IndepSetError, IndepStrategy, IndependentSetGame};
use crate::rational::{self, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LuckError {
    #[error("luck games need k >= 2 and n >= 1 (got k = {k}, n = {n})")]
    BadParams { k: usize, n: usize },
    #[error(transparent)]
    IndepSet(#[from] IndepSetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LuckParams {
    k: usize,
    n: usize,
}

impl LuckParams {
    pub fn new(k: usize, n: usize) -> Result<Self, LuckError> {
        if k < 2 || n == 0 {
            return Err(LuckError::BadParams { k, n });
        }
        Ok(LuckParams { k, n })
    }

    pub fn k(self) -> usize {
        self.k
    }

    pub fn n(self) -> usize {
        self.n
    }

    /// Number of questions `kn`.
    pub fn t(self) -> usize {
        self.k * self.n
    }

    /// `1/k - 1/k^2`.
    pub fn epsilon(self) -> Rational {
        let k = self.k as i64;
        Rational::new(k - 1, k * k)
    }
}

/// Win iff `x = y`, or `x > n` and `y > n` (1-based labels).
pub fn luck_wins(p: LuckParams, x: usize, y: usize) -> bool {
    x == y || (x > p.n && y > p.n)
}

pub fn make_luck_game(p: LuckParams) -> SynchronousGame {
    let t = p.t();
    let predicate = Predicate::from_fn(t, 1, |q, q2, _, _| luck_wins(p, q + 1, q2 + 1));
    SynchronousGame::new(
        (1..=t).map(|x| x.to_string()).collect(),
        vec!["1".to_string()],
        Distribution::uniform(t),
        predicate,
    )
    .expect("consistent shapes")
}

/// `(k-1)^2/k^2 + 1/(k^2 n)`.
pub fn luck_value(p: LuckParams) -> Rational {
    let (k, n) = (p.k as i64, p.n as i64);
    Rational::new((k - 1) * (k - 1), k * k) + Rational::new(1, k * k * n)
}

/// The sharpness strategy on `(X(G_{k,n}), kn)`: index `i <= n` answers
/// vertex `i + n`, index `i > n` answers vertex `i` (1-based).
pub fn sharpness_answers(p: LuckParams) -> Vec<usize> {
    (1..=p.t())
        .map(|i| if i <= p.n { i + p.n - 1 } else { i - 1 })
        .collect()
}

pub fn sharpness_strategy(p: LuckParams) -> IndepStrategy {
    IndepStrategy::deterministic(&sharpness_answers(p), p.t())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessReport {
    pub k: usize,
    pub n: usize,
    pub t: usize,
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub luck_value: Rational,
    /// `1 - epsilon`.
    #[serde(serialize_with = "ser_rational")]
    pub luck_value_bound: Rational,
    /// Loss of the sharpness strategy, evaluated exactly.
    #[serde(serialize_with = "ser_rational")]
    pub strategy_loss: Rational,
    /// The same loss through the operator evaluator.
    pub strategy_loss_measured: f64,
    /// `1/(k^2 n)`.
    #[serde(serialize_with = "ser_rational")]
    pub closed_form_loss: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub strategy_value: Rational,
    /// `1 - 2 epsilon / t`.
    #[serde(serialize_with = "ser_rational")]
    pub value_lower_bound: Rational,
    pub game_value_within_bound: bool,
    pub strategy_value_above_bound: bool,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational::format_rational(r))
}

impl SharpnessReport {
    pub fn holds(&self) -> bool {
        self.game_value_within_bound
            && self.strategy_value_above_bound
            && self.strategy_loss == self.closed_form_loss
    }

    pub fn to_key_value(&self) -> String {
        let f = rational::format_rational;
        format!(
            "k {}\nn {}\nt {}\nepsilon {}\nluck_value {}\nluck_value_bound {}\nstrategy_loss {}\n\
             strategy_loss_measured {:.12e}\nclosed_form_loss {}\nstrategy_value {}\nvalue_lower_bound {}\n\
             game_value_within_bound {}\nstrategy_value_above_bound {}\n",
            self.k,
            self.n,
            self.t,
            f(&self.epsilon),
            f(&self.luck_value),
            f(&self.luck_value_bound),
            f(&self.strategy_loss),
            self.strategy_loss_measured,
            f(&self.closed_form_loss),
            f(&self.strategy_value),
            f(&self.value_lower_bound),
            self.game_value_within_bound,
            self.strategy_value_above_bound,
        )
    }
}

/// Independent set game of `G_{k,n}` with `t = kn`.
pub fn luck_indep_game(p: LuckParams) -> Result<IndependentSetGame, LuckError> {
    Ok(indepset::reduce(&make_luck_game(p))?)
}

pub fn sharpness_report(p: LuckParams) -> Result<SharpnessReport, LuckError> {
    let game = luck_indep_game(p)?;
    let answers = sharpness_answers(p);
    let strategy_loss = indepset::exact_deterministic_loss(&game, &answers);
    let measured = indepset::sync_loss_indep(&game, &sharpness_strategy(p), Tolerance::default())?;
    let epsilon = p.epsilon();
    let t = Rational::from_integer(p.t() as i64);
    let k = p.k as i64;
    let luck_value = luck_value(p);
    let strategy_value = Rational::one() - strategy_loss;
    let value_lower_bound = Rational::one() - epsilon * 2 / t;
    Ok(SharpnessReport {
        k: p.k,
        n: p.n,
        t: p.t(),
        epsilon,
        luck_value,
        luck_value_bound: Rational::one() - epsilon,
        strategy_loss,
        strategy_loss_measured: measured.loss,
        closed_form_loss: Rational::new(1, k * k * p.n as i64),
        strategy_value,
        value_lower_bound,
        game_value_within_bound: luck_value <= Rational::one() - epsilon,
        strategy_value_above_bound: strategy_value >= value_lower_bound
            && strategy_loss >= Rational::zero(),
    })
}
