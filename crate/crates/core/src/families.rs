//! Programmatic abstract systems that are infinite (or too irregular) to be
//! written as rewrite rules.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::{One, Zero};

use crate::multidist::{int, ratio, FiniteDistribution, Rational};
use crate::rewriting::{Pars, Reduct};

fn reduct<T: Ord + Clone>(entries: Vec<(T, Rational)>, rule: usize) -> Reduct<T> {
    Reduct {
        dist: FiniteDistribution::new(entries).expect("family rules are distributions"),
        position: None,
        rule,
    }
}

/// Random walk on ℕ: `n+1 → {p: n, 1−p: n+2}`; `0` is terminal.
///
/// `p` is the probability of stepping *down*.
#[derive(Debug, Clone)]
pub struct RandomWalk {
    down: Rational,
    bound: u64,
}

impl RandomWalk {
    /// Objects above `bound` are truncated.
    pub fn new(down: Rational, bound: u64) -> Option<Self> {
        (down >= Rational::zero() && down <= Rational::one()).then_some(Self { down, bound })
    }

    pub fn down(&self) -> &Rational {
        &self.down
    }
}

impl Pars for RandomWalk {
    type Obj = u64;

    fn reducts(&self, &n: &u64) -> Vec<Reduct<u64>> {
        if n == 0 || n > self.bound {
            return Vec::new();
        }
        let up = int(1) - &self.down;
        vec![reduct(vec![(n - 1, self.down.clone()), (n + 1, up)], 0)]
    }

    fn is_truncated(&self, &n: &u64) -> bool {
        n > self.bound
    }
}

/// Objects of the nondeterministic system with two ways out of `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AmdObj {
    A,
    B1,
    B2,
    C,
    D1,
    D2,
}

impl fmt::Display for AmdObj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AmdObj::A => "a",
            AmdObj::B1 => "b1",
            AmdObj::B2 => "b2",
            AmdObj::C => "c",
            AmdObj::D1 => "d1",
            AmdObj::D2 => "d2",
        })
    }
}

impl FromStr for AmdObj {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "a" => AmdObj::A,
            "b1" => AmdObj::B1,
            "b2" => AmdObj::B2,
            "c" => AmdObj::C,
            "d1" => AmdObj::D1,
            "d2" => AmdObj::D2,
            _ => return Err(alloc::format!("unknown object `{s}` (expected a, b1, b2, c, d1, d2)")),
        })
    }
}

/// `a → {½: b1, ½: b2}`, `b1 → {1: c}`, `b2 → {1: c}`, `c → {1: d1}`,
/// `c → {1: d2}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Amd;

impl Pars for Amd {
    type Obj = AmdObj;

    fn reducts(&self, obj: &AmdObj) -> Vec<Reduct<AmdObj>> {
        use AmdObj::*;
        let one = || int(1);
        match obj {
            A => vec![reduct(vec![(B1, ratio(1, 2)), (B2, ratio(1, 2))], 0)],
            B1 => vec![reduct(vec![(C, one())], 1)],
            B2 => vec![reduct(vec![(C, one())], 2)],
            C => vec![reduct(vec![(D1, one())], 3), reduct(vec![(D2, one())], 4)],
            D1 | D2 => Vec::new(),
        }
    }
}

/// Objects `n ∈ ℕ` and `a_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnObj {
    Nat(u64),
    A(u32),
}

impl fmt::Display for AnObj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnObj::Nat(n) => write!(f, "{n}"),
            AnObj::A(n) => write!(f, "a{n}"),
        }
    }
}

impl FromStr for AnObj {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || alloc::format!("unknown object `{s}` (expected a natural number or aN)");
        match s.strip_prefix('a') {
            Some(rest) => rest
                .trim_start_matches('_')
                .parse()
                .map(AnObj::A)
                .map_err(|_| bad()),
            None => s.parse().map(AnObj::Nat).map_err(|_| bad()),
        }
    }
}

/// Largest `n` for which `2^n · n` fits in a `u64`.
pub const AN_MAX_INDEX: u32 = 57;

/// The finitely branching system that terminates positively almost surely
/// under every strategy yet has unbounded expected derivation height:
/// `a_n → {½: a_{n+1}, ½: 0}`, `a_n → {1: 2^n·n}`, `n+1 → {1: n}`.
#[derive(Debug, Clone)]
pub struct AnFamily {
    bound: u32,
}

impl AnFamily {
    /// `a_n` with `n > bound` is truncated; the bound is capped at
    /// [`AN_MAX_INDEX`].
    pub fn new(bound: u32) -> Self {
        Self {
            bound: bound.min(AN_MAX_INDEX),
        }
    }
}

impl Pars for AnFamily {
    type Obj = AnObj;

    fn reducts(&self, obj: &AnObj) -> Vec<Reduct<AnObj>> {
        match *obj {
            AnObj::Nat(0) => Vec::new(),
            AnObj::Nat(n) => vec![reduct(vec![(AnObj::Nat(n - 1), int(1))], 2)],
            AnObj::A(n) if n > self.bound => Vec::new(),
            AnObj::A(n) => vec![
                reduct(
                    vec![(AnObj::A(n + 1), ratio(1, 2)), (AnObj::Nat(0), ratio(1, 2))],
                    0,
                ),
                reduct(vec![(AnObj::Nat((1u64 << n) * u64::from(n)), int(1))], 1),
            ],
        }
    }

    fn is_truncated(&self, obj: &AnObj) -> bool {
        matches!(*obj, AnObj::A(n) if n > self.bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multidist::MultiDistribution;
    use crate::rewriting::{all_steps, ars_embedding_check, step_multidist, FnChooser, Strategy};

    #[test]
    fn random_walk_sequence() {
        let rw = RandomWalk::new(ratio(1, 2), 1000).unwrap();
        let mu0 = MultiDistribution::point(1u64);
        let mu1 = step_multidist(&rw, &mu0, &mut Strategy::LeftmostOutermost);
        assert_eq!(
            mu1,
            MultiDistribution::new(vec![(ratio(1, 2), 0), (ratio(1, 2), 2)]).unwrap()
        );
        let mu2 = step_multidist(&rw, &mu1, &mut Strategy::LeftmostOutermost);
        assert_eq!(
            mu2,
            MultiDistribution::new(vec![(ratio(1, 4), 1), (ratio(1, 4), 3)]).unwrap()
        );
    }

    #[test]
    fn amd_chooser_per_entry() {
        let cc = MultiDistribution::new(vec![(ratio(1, 2), AmdObj::C), (ratio(1, 2), AmdObj::C)])
            .unwrap();
        let mut chooser = FnChooser(|entry: usize, _: &AmdObj, _: &[Reduct<AmdObj>]| entry);
        let next = step_multidist(&Amd, &cc, &mut chooser);
        assert_eq!(
            next,
            MultiDistribution::new(vec![(ratio(1, 2), AmdObj::D1), (ratio(1, 2), AmdObj::D2)])
                .unwrap()
        );
    }

    #[test]
    fn ars_embedding() {
        use AmdObj::*;
        // every reduct except a's is a point mass
        assert!(ars_embedding_check(&Amd, &[B1, B2, C, D1, D2]).is_ok());
        assert_eq!(
            all_steps(&Amd, &MultiDistribution::point(B1), 10).unwrap(),
            vec![MultiDistribution::point(C)]
        );
        assert_eq!(
            all_steps(&Amd, &MultiDistribution::point(D1), 10).unwrap(),
            vec![MultiDistribution::empty()]
        );
        assert!(ars_embedding_check(&Amd, &[A]).is_err());
    }

    #[test]
    fn an_family_reducts() {
        let fam = AnFamily::new(20);
        assert_eq!(fam.reducts(&AnObj::A(3)).len(), 2);
        assert_eq!(
            fam.reducts(&AnObj::A(3))[1].dist,
            FiniteDistribution::point(AnObj::Nat(24))
        );
        assert_eq!(
            fam.reducts(&AnObj::A(0))[1].dist,
            FiniteDistribution::point(AnObj::Nat(0))
        );
        assert!(fam.reducts(&AnObj::Nat(0)).is_empty());
        assert!(fam.reducts(&AnObj::A(21)).is_empty());
        assert!(fam.is_truncated(&AnObj::A(21)));
        assert_eq!("a4".parse::<AnObj>(), Ok(AnObj::A(4)));
        assert_eq!("12".parse::<AnObj>(), Ok(AnObj::Nat(12)));
        assert!("b".parse::<AnObj>().is_err());
    }

    #[test]
    fn walk_truncation() {
        let rw = RandomWalk::new(ratio(1, 2), 3).unwrap();
        assert!(rw.reducts(&4).is_empty());
        assert!(rw.is_truncated(&4));
        assert!(!rw.is_truncated(&0));
        assert!(RandomWalk::new(ratio(3, 2), 3).is_none());
    }
}
