//! Eventually periodic boundary rays `p q q q …` and the action on them.

use std::collections::HashMap;
use std::fmt;

use crate::automaton::{Alphabet, Automaton, GroupWord, TreeWord};
use crate::error::{Error, Result};

/// Hard ceiling on transducer steps in [`act_ray`], whatever the nominal bound.
pub const MAX_RAY_STEPS: usize = 10_000_000;

/// An eventually periodic ray `preperiod · period^ω`, always kept canonical:
/// the period is primitive and the preperiod cannot be shortened by rotating
/// the period.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ray {
    preperiod: Vec<usize>,
    period: Vec<usize>,
}

impl Ray {
    pub fn new(preperiod: Vec<usize>, period: Vec<usize>) -> Result<Ray> {
        if period.is_empty() {
            return Err(Error::InvalidRay(
                format!("{}", TreeWord::new(preperiod)),
                "period must be nonempty".to_string(),
            ));
        }
        let mut pre = preperiod;
        let mut per = primitive_root(period);
        while let (Some(&x), Some(&y)) = (pre.last(), per.last()) {
            if x != y {
                break;
            }
            pre.pop();
            per.rotate_right(1);
        }
        Ok(Ray {
            preperiod: pre,
            period: per,
        })
    }

    /// The constant ray `x^ω`.
    pub fn constant(letter: usize) -> Ray {
        Ray {
            preperiod: Vec::new(),
            period: vec![letter],
        }
    }

    /// Parses `p(q)`, e.g. `01(10)` or `(1)`.
    pub fn parse(text: &str, alphabet: Alphabet) -> Result<Ray> {
        let t = text.trim();
        let bad = |why: &str| Error::InvalidRay(t.to_string(), why.to_string());
        let open = t.find('(').ok_or_else(|| bad("expected the form p(q)"))?;
        if !t.ends_with(')') || t[open + 1..t.len() - 1].contains(['(', ')']) {
            return Err(bad("expected the form p(q)"));
        }
        let pre = TreeWord::parse(&t[..open], alphabet)
            .map_err(|_| bad("preperiod has letters outside the alphabet"))?;
        let per = &t[open + 1..t.len() - 1];
        if per.is_empty() {
            return Err(bad("period must be nonempty"));
        }
        let per = TreeWord::parse(per, alphabet)
            .map_err(|_| bad("period has letters outside the alphabet"))?;
        Ray::new(pre.letters().to_vec(), per.letters().to_vec())
    }

    pub fn preperiod(&self) -> &[usize] {
        &self.preperiod
    }

    pub fn period(&self) -> &[usize] {
        &self.period
    }

    pub fn letter(&self, i: usize) -> usize {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// The first `m` letters.
    pub fn prefix(&self, m: usize) -> TreeWord {
        TreeWord::new((0..m).map(|i| self.letter(i)).collect())
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &x in &self.preperiod {
            write!(f, "{}", Alphabet::letter_char(x))?;
        }
        f.write_str("(")?;
        for &x in &self.period {
            write!(f, "{}", Alphabet::letter_char(x))?;
        }
        f.write_str(")")
    }
}

fn primitive_root(period: Vec<usize>) -> Vec<usize> {
    let n = period.len();
    for d in 1..n {
        if n.is_multiple_of(d) && (d..n).all(|i| period[i] == period[i - d]) {
            return period[..d].to_vec();
        }
    }
    period
}

/// Default step bound for [`act_ray`]: `|p| + (|states|+1)^{|g|}·|q|`, capped at
/// [`MAX_RAY_STEPS`].
pub fn default_ray_bound(aut: &Automaton, g: &GroupWord, r: &Ray) -> usize {
    let words = (aut.states().len() + 1).saturating_pow(g.len().min(u32::MAX as usize) as u32);
    words
        .saturating_mul(r.period().len())
        .saturating_add(r.preperiod().len())
        .min(MAX_RAY_STEPS)
}

/// Image of a ray under `g`, with the default step bound.
pub fn act_ray(aut: &Automaton, g: &GroupWord, r: &Ray) -> Result<Ray> {
    act_ray_bounded(aut, g, r, default_ray_bound(aut, g, r))
}

/// Image of a ray under `g`. The transducer runs until the pair
/// (current section word, phase in the period) repeats; `bound` limits the
/// number of letters read.
pub fn act_ray_bounded(aut: &Automaton, g: &GroupWord, r: &Ray, bound: usize) -> Result<Ray> {
    let mut word = aut.strip_trivial(g.letters());
    let mut out = Vec::new();
    for &x in r.preperiod() {
        out.push(aut.feed(&mut word, x));
        word = aut.strip_trivial(&word);
    }
    let q = r.period().len();
    let mut seen: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
    let mut steps = r.preperiod().len();
    let mut phase = 0;
    loop {
        if let Some(&start) = seen.get(&(word.clone(), phase)) {
            let period = out.split_off(start);
            return Ray::new(out, period);
        }
        if steps >= bound {
            return Err(Error::OrbitDidNotClose(steps));
        }
        seen.insert((word.clone(), phase), out.len());
        out.push(aut.feed(&mut word, r.period()[phase]));
        word = aut.strip_trivial(&word);
        phase = (phase + 1) % q;
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn ray(aut: &Automaton, s: &str) -> Ray {
        Ray::parse(s, aut.alphabet()).unwrap()
    }

    #[test]
    fn canonical_form() {
        let r = Ray::new(vec![0, 1, 0, 1], vec![0, 1, 0, 1]).unwrap();
        assert_eq!(r.preperiod(), &[] as &[usize]);
        assert_eq!(r.period(), &[0, 1]);
        let r = Ray::new(vec![1, 1, 0], vec![1, 0]).unwrap();
        assert_eq!((r.preperiod(), r.period()), (&[1usize][..], &[1usize, 0][..]));
        assert_eq!(r.to_string(), "1(10)");
        assert!(Ray::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn parse_errors() {
        let a = Alphabet::new(2).unwrap();
        for bad in ["01", "0()", "(2)", "0(1", "(0)(1)"] {
            assert!(Ray::parse(bad, a).is_err(), "{bad}");
        }
        assert_eq!(Ray::parse("ε(1)", a).unwrap(), Ray::constant(1));
    }

    #[test]
    fn odometer_on_rays() {
        let o = catalog::automaton("odometer").unwrap();
        let a = o.parse_word("a").unwrap();
        assert_eq!(act_ray(&o, &a, &ray(&o, "(1)")).unwrap(), ray(&o, "(0)"));
        assert_eq!(act_ray(&o, &a, &ray(&o, "(0)")).unwrap(), ray(&o, "1(0)"));
        let ainv = o.parse_word("a^-1").unwrap();
        assert_eq!(act_ray(&o, &ainv, &ray(&o, "(0)")).unwrap(), ray(&o, "(1)"));
    }

    #[test]
    fn identity_fixes_rays() {
        let g = catalog::automaton("grigorchuk").unwrap();
        let r = ray(&g, "10(011)");
        assert_eq!(act_ray(&g, &GroupWord::identity(), &r).unwrap(), r);
    }

    #[test]
    fn bound_is_enforced() {
        let o = catalog::automaton("odometer").unwrap();
        let a = o.parse_word("a").unwrap();
        assert!(matches!(
            act_ray_bounded(&o, &a, &ray(&o, "(1)"), 0),
            Err(Error::OrbitDidNotClose(_))
        ));
    }
}
