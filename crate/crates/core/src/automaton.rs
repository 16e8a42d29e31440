//! Finite self-similar sets of tree automorphisms (Mealy automata).
//!
//! A state `s` is given by its wreath recursion `s = α_s(s_0, …, s_{k-1})`:
//! a root permutation `α_s` of the alphabet and one section per letter. The
//! action on a word is `s(xw) = α_s(x) s_x(w)`.
//!
//! Words in the generators act on the left, so the rightmost letter of a
//! [`GroupWord`] is applied first.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Letters are `0..size`. Textual forms write letters as base-36 digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet(usize);

impl Alphabet {
    pub const MAX: usize = 36;

    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > Self::MAX {
            return Err(Error::AlphabetMismatch(format!(
                "alphabet size {size} outside 1..={}",
                Self::MAX
            )));
        }
        Ok(Alphabet(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn letter_char(letter: usize) -> char {
        std::char::from_digit(letter as u32, 36).expect("letter below 36")
    }
}

/// A vertex of the rooted tree: a finite word over the alphabet.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeWord(Vec<usize>);

impl TreeWord {
    pub fn new(letters: Vec<usize>) -> Self {
        TreeWord(letters)
    }

    pub fn empty() -> Self {
        TreeWord(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &TreeWord) -> TreeWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        TreeWord(v)
    }

    pub fn prefix(&self, len: usize) -> TreeWord {
        TreeWord(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Lexicographic index in `X^n`; the first letter is the most significant digit.
    pub fn to_index(&self, arity: usize) -> usize {
        self.0.iter().fold(0, |acc, &x| acc * arity + x)
    }

    pub fn from_index(mut index: usize, arity: usize, level: usize) -> TreeWord {
        let mut v = vec![0; level];
        for slot in v.iter_mut().rev() {
            *slot = index % arity;
            index /= arity;
        }
        TreeWord(v)
    }

    /// Parses a digit string such as `"0121"`; `""` and `"ε"` are the root.
    pub fn parse(text: &str, alphabet: Alphabet) -> Result<TreeWord> {
        let text = text.trim();
        if text.is_empty() || text == "ε" {
            return Ok(TreeWord::empty());
        }
        text.chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as usize)
                    .filter(|&d| d < alphabet.size())
                    .ok_or_else(|| {
                        Error::InvalidWord(text.to_string(), format!("letter `{c}` not in alphabet"))
                    })
            })
            .collect::<Result<Vec<_>>>()
            .map(TreeWord)
    }
}

impl fmt::Display for TreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for &x in &self.0 {
            write!(f, "{}", Alphabet::letter_char(x))?;
        }
        Ok(())
    }
}

/// A word in the states of an automaton, read as a group element.
///
/// Letters are state indices of the automaton that produced the word. Words are
/// never freely reduced; the empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord(Vec<usize>);

impl GroupWord {
    pub fn new(states: Vec<usize>) -> Self {
        GroupWord(states)
    }

    pub fn identity() -> Self {
        GroupWord(Vec::new())
    }

    pub fn single(state: usize) -> Self {
        GroupWord(vec![state])
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The product `self · other`, which applies `other` first.
    pub fn concat(&self, other: &GroupWord) -> GroupWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        GroupWord(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub name: String,
    pub perm: Vec<usize>,
    pub sections: Vec<usize>,
}

/// On-disk automaton description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutomatonFile {
    #[serde(default)]
    pub name: Option<String>,
    pub alphabet: usize,
    pub states: Vec<StateEntry>,
    pub generators: Vec<String>,
    #[serde(default)]
    pub inverses: BTreeMap<String, String>,
    #[serde(default)]
    pub identity: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateEntry {
    pub name: String,
    pub perm: Vec<usize>,
    pub sections: Vec<String>,
}

/// A validated finite self-similar set closed under formal inversion.
#[derive(Clone, Debug)]
pub struct Automaton {
    name: String,
    alphabet: Alphabet,
    states: Vec<State>,
    inverse: Vec<usize>,
    generators: Vec<usize>,
    identity: Option<usize>,
    trivial: Vec<bool>,
}

/// Parses and validates an automaton in the JSON file format.
pub fn parse_automaton(text: &str) -> Result<Automaton> {
    let file: AutomatonFile = serde_json::from_str(text)?;
    Automaton::from_file(&file)
}

impl Automaton {
    pub fn from_file(file: &AutomatonFile) -> Result<Automaton> {
        let alphabet = Alphabet::new(file.alphabet)?;
        let k = alphabet.size();

        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, s) in file.states.iter().enumerate() {
            if index.insert(s.name.as_str(), i).is_some() {
                return Err(Error::DuplicateState(s.name.clone()));
            }
        }
        let lookup = |name: &str| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownState(name.to_string()))
        };

        let mut states = Vec::with_capacity(file.states.len());
        for entry in &file.states {
            if entry.perm.len() != k || entry.sections.len() != k {
                return Err(Error::AlphabetMismatch(format!(
                    "state `{}` has {} images and {} sections for an alphabet of size {k}",
                    entry.name,
                    entry.perm.len(),
                    entry.sections.len()
                )));
            }
            if !is_permutation(&entry.perm) {
                return Err(Error::NonBijective(entry.name.clone()));
            }
            let sections = entry
                .sections
                .iter()
                .map(|s| lookup(s))
                .collect::<Result<Vec<_>>>()?;
            states.push(State {
                name: entry.name.clone(),
                perm: entry.perm.clone(),
                sections,
            });
        }

        let identity = match &file.identity {
            Some(name) => {
                let i = lookup(name)?;
                let s = &states[i];
                let trivial_perm = s.perm.iter().enumerate().all(|(x, &y)| x == y);
                if !trivial_perm || s.sections.iter().any(|&t| t != i) {
                    return Err(Error::InvalidArgument(format!(
                        "identity state `{name}` must have trivial permutation and itself as every section"
                    )));
                }
                Some(i)
            }
            None => None,
        };

        let (mut states, mut inverse) = close_under_inversion(states);

        // Declared inverses must agree with the computed ones up to equivalence.
        if !file.inverses.is_empty() {
            let classes = state_classes(&states);
            for (g, h) in &file.inverses {
                let gi = lookup(g)?;
                let hi = lookup(h)?;
                if classes[inverse[gi]] != classes[hi] {
                    return Err(Error::BadInverse(g.clone(), h.clone()));
                }
                inverse[gi] = hi;
                inverse[hi] = gi;
            }
        }

        let mut generators = Vec::new();
        for g in &file.generators {
            let gi = lookup(g)?;
            if !generators.contains(&gi) {
                generators.push(gi);
            }
        }
        let listed = generators.clone();
        for g in listed {
            if !generators.contains(&inverse[g]) {
                generators.push(inverse[g]);
            }
        }

        let trivial = trivial_states(&states);
        states.shrink_to_fit();
        Ok(Automaton {
            name: file.name.clone().unwrap_or_else(|| "automaton".to_string()),
            alphabet,
            states,
            inverse,
            generators,
            identity,
            trivial,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn arity(&self) -> usize {
        self.alphabet.size()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &State {
        &self.states[i]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    /// Index of the formal inverse of state `i`.
    pub fn inverse_of(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn is_involution(&self, i: usize) -> bool {
        self.inverse[i] == i
    }

    /// The symmetric generating set `S`, in file order followed by generated inverses.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.generators
            .iter()
            .map(|&g| self.states[g].name.clone())
            .collect()
    }

    pub fn identity_state(&self) -> Option<usize> {
        self.identity
    }

    /// True when state `i` acts as the identity on the whole tree.
    pub fn acts_trivially(&self, i: usize) -> bool {
        self.trivial[i]
    }

    /// One transducer step: state `s` reads `x`, writes the image and moves to the section.
    pub fn step(&self, s: usize, x: usize) -> (usize, usize) {
        let st = &self.states[s];
        (st.perm[x], st.sections[x])
    }

    /// Feeds one letter through a word (rightmost state first), replacing each
    /// state by its section. Returns the output letter.
    pub(crate) fn feed(&self, word: &mut [usize], x: usize) -> usize {
        let mut y = x;
        for s in word.iter_mut().rev() {
            let st = &self.states[*s];
            let image = st.perm[y];
            *s = st.sections[y];
            y = image;
        }
        y
    }

    pub(crate) fn strip_trivial(&self, word: &[usize]) -> Vec<usize> {
        word.iter().copied().filter(|&s| !self.trivial[s]).collect()
    }

    /// Output permutation of a word on the first level, and its first-level sections.
    pub(crate) fn word_recursion(&self, word: &[usize]) -> (Vec<usize>, Vec<Vec<usize>>) {
        let k = self.arity();
        let mut perm = Vec::with_capacity(k);
        let mut sections = Vec::with_capacity(k);
        for x in 0..k {
            let mut w = word.to_vec();
            perm.push(self.feed(&mut w, x));
            sections.push(self.strip_trivial(&w));
        }
        (perm, sections)
    }

    /// Image of the tree vertex `u` under `g`.
    pub fn act_word(&self, g: &GroupWord, u: &TreeWord) -> TreeWord {
        let mut cur = g.letters().to_vec();
        TreeWord::new(u.letters().iter().map(|&x| self.feed(&mut cur, x)).collect())
    }

    /// The section `g_u`, with trivially acting letters removed.
    ///
    /// Satisfies `g(uv) = g(u) g_u(v)` and `(gh)_u = g_{h(u)} h_u`.
    pub fn section(&self, g: &GroupWord, u: &TreeWord) -> GroupWord {
        let mut cur = g.letters().to_vec();
        for &x in u.letters() {
            self.feed(&mut cur, x);
        }
        GroupWord::new(self.strip_trivial(&cur))
    }

    /// The formal inverse `g⁻¹`: reversed word of inverse states.
    pub fn invert(&self, g: &GroupWord) -> GroupWord {
        GroupWord::new(g.letters().iter().rev().map(|&s| self.inverse[s]).collect())
    }

    /// True iff the generator orbit of `0^n` is all of `X^n`.
    pub fn is_level_transitive(&self, n: usize) -> bool {
        let k = self.arity();
        let size = k.pow(n as u32);
        let mut seen = vec![false; size];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            let word = TreeWord::from_index(v, k, n);
            for &s in &self.generators {
                let w = self.act_word(&GroupWord::single(s), &word).to_index(k);
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == size
    }

    /// Parses a group word. Tokens may be separated by whitespace, `*` or `·`;
    /// inside a token, state names are matched greedily (so `ab` and
    /// `a^-1b` both work). `e`, `1` and `ε` denote the identity when no state
    /// carries that name.
    pub fn parse_word(&self, text: &str) -> Result<GroupWord> {
        let mut out = Vec::new();
        for token in text
            .split(|c: char| c.is_whitespace() || c == '*' || c == '·')
            .filter(|t| !t.is_empty())
        {
            if let Some(i) = self.state_index(token) {
                out.push(i);
                continue;
            }
            if matches!(token, "e" | "1" | "ε") {
                continue;
            }
            let mut rest = token;
            while !rest.is_empty() {
                let best = self
                    .states
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| rest.starts_with(s.name.as_str()))
                    .max_by_key(|(_, s)| s.name.len());
                match best {
                    Some((i, s)) => {
                        out.push(i);
                        rest = &rest[s.name.len()..];
                    }
                    None => {
                        return Err(Error::InvalidWord(
                            text.to_string(),
                            format!("cannot read `{rest}` as a state name"),
                        ))
                    }
                }
            }
        }
        Ok(GroupWord::new(out))
    }

    pub fn format_word(&self, g: &GroupWord) -> String {
        if g.is_empty() {
            return "e".to_string();
        }
        let names: Vec<&str> = g
            .letters()
            .iter()
            .map(|&s| self.states[s].name.as_str())
            .collect();
        if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join(" ")
        }
    }
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &y in perm {
        if y >= perm.len() || seen[y] {
            return false;
        }
        seen[y] = true;
    }
    true
}

pub(crate) fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (x, &y) in perm.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

/// Moore-style partition refinement of a deterministic Mealy table.
///
/// Nodes get the same class iff they define the same tree automorphism.
/// Class ids are assigned in order of first occurrence.
pub(crate) fn mealy_classes(perms: &[Vec<usize>], succ: &[Vec<usize>]) -> Vec<usize> {
    let n = perms.len();
    let mut ids: HashMap<&[usize], usize> = HashMap::new();
    let mut class: Vec<usize> = (0..n)
        .map(|i| {
            let next = ids.len();
            *ids.entry(perms[i].as_slice()).or_insert(next)
        })
        .collect();
    let mut count = ids.len();
    loop {
        let mut ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let next: Vec<usize> = (0..n)
            .map(|i| {
                let key = (class[i], succ[i].iter().map(|&j| class[j]).collect());
                let fresh = ids.len();
                *ids.entry(key).or_insert(fresh)
            })
            .collect();
        class = next;
        if ids.len() == count {
            return class;
        }
        count = ids.len();
    }
}

fn state_classes(states: &[State]) -> Vec<usize> {
    let perms: Vec<Vec<usize>> = states.iter().map(|s| s.perm.clone()).collect();
    let succ: Vec<Vec<usize>> = states.iter().map(|s| s.sections.clone()).collect();
    mealy_classes(&perms, &succ)
}

fn trivial_states(states: &[State]) -> Vec<bool> {
    let mut trivial: Vec<bool> = states
        .iter()
        .map(|s| s.perm.iter().enumerate().all(|(x, &y)| x == y))
        .collect();
    loop {
        let mut changed = false;
        for (i, s) in states.iter().enumerate() {
            if trivial[i] && s.sections.iter().any(|&t| !trivial[t]) {
                trivial[i] = false;
                changed = true;
            }
        }
        if !changed {
            return trivial;
        }
    }
}

/// Adds formal inverse states where no existing state already acts as the inverse.
///
/// Uses `(g⁻¹)_x = (g_{g⁻¹(x)})⁻¹`. Returns the extended state list and the
/// inverse index of every state.
fn close_under_inversion(states: Vec<State>) -> (Vec<State>, Vec<usize>) {
    let m = states.len();
    let mut perms: Vec<Vec<usize>> = states.iter().map(|s| s.perm.clone()).collect();
    let mut succ: Vec<Vec<usize>> = states.iter().map(|s| s.sections.clone()).collect();
    for s in &states {
        let inv = inverse_permutation(&s.perm);
        succ.push(inv.iter().map(|&x| m + s.sections[x]).collect());
        perms.push(inv);
    }
    let class = mealy_classes(&perms, &succ);

    let mut original_of_class: HashMap<usize, usize> = HashMap::new();
    for i in (0..m).rev() {
        original_of_class.insert(class[i], i);
    }
    // New states, one per class that has no original member.
    let mut new_of_class: BTreeMap<usize, usize> = BTreeMap::new();
    let mut new_nodes = Vec::new();
    for (node, &c) in class.iter().enumerate().skip(m) {
        if !original_of_class.contains_key(&c) && !new_of_class.contains_key(&c) {
            new_of_class.insert(c, m + new_nodes.len());
            new_nodes.push(node);
        }
    }
    let resolve = |node: usize| -> usize {
        let c = class[node];
        original_of_class
            .get(&c)
            .copied()
            .unwrap_or_else(|| new_of_class[&c])
    };

    let mut taken: Vec<String> = states.iter().map(|s| s.name.clone()).collect();
    let mut out = states;
    let mut inverse: Vec<usize> = (0..m).map(|i| resolve(m + i)).collect();
    for &node in &new_nodes {
        let base = &out[node - m].name;
        let mut name = format!("{base}^-1");
        while taken.contains(&name) {
            name.push('\'');
        }
        taken.push(name.clone());
        let sections = succ[node].iter().map(|&t| resolve(t)).collect();
        out.push(State {
            name,
            perm: perms[node].clone(),
            sections,
        });
        inverse.push(resolve(node - m));
    }
    (out, inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn word(aut: &Automaton, s: &str) -> GroupWord {
        aut.parse_word(s).unwrap()
    }

    fn tw(aut: &Automaton, s: &str) -> TreeWord {
        TreeWord::parse(s, aut.alphabet()).unwrap()
    }

    #[test]
    fn grigorchuk_file() {
        let g = catalog::automaton("grigorchuk").unwrap();
        assert_eq!(g.states().len(), 5);
        let names: Vec<_> = g.states().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["e", "a", "b", "c", "d"]);
        let b = g.state(g.state_index("b").unwrap());
        assert_eq!(b.perm, vec![0, 1]);
        assert_eq!(b.sections, vec![g.state_index("a").unwrap(), g.state_index("c").unwrap()]);
        for s in ["a", "b", "c", "d"] {
            assert!(g.is_involution(g.state_index(s).unwrap()), "{s}");
        }
        assert_eq!(g.generator_names(), ["a", "b", "c", "d"]);
    }

    #[test]
    fn tangled_file_generates_inverses() {
        let t = catalog::automaton("tangled").unwrap();
        assert_eq!(t.generator_names(), ["a", "b", "a^-1", "b^-1"]);
        let a = t.state_index("a").unwrap();
        assert_eq!(t.state(a).perm, vec![1, 0, 2]);
        let ainv = t.state(t.inverse_of(a));
        assert_eq!(ainv.perm, vec![1, 0, 2]);
        // a⁻¹ = (01)(a⁻¹, e, e)
        assert_eq!(ainv.sections[0], t.inverse_of(a));
        assert!(t.acts_trivially(ainv.sections[1]));
        assert!(t.acts_trivially(ainv.sections[2]));
    }

    #[test]
    fn missing_state_is_rejected() {
        let text = r#"{"alphabet":2,"states":[{"name":"a","perm":[1,0],"sections":["a","q"]}],"generators":["a"]}"#;
        assert!(matches!(parse_automaton(text), Err(Error::UnknownState(s)) if s == "q"));
    }

    #[test]
    fn non_bijective_and_wrong_arity_are_rejected() {
        let text = r#"{"alphabet":2,"states":[{"name":"a","perm":[1,1],"sections":["a","a"]}],"generators":["a"]}"#;
        assert!(matches!(parse_automaton(text), Err(Error::NonBijective(_))));
        let text = r#"{"alphabet":3,"states":[{"name":"a","perm":[1,0],"sections":["a","a"]}],"generators":["a"]}"#;
        assert!(matches!(parse_automaton(text), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn wrong_declared_inverse_is_rejected() {
        let text = r#"{"alphabet":2,"states":[
            {"name":"e","perm":[0,1],"sections":["e","e"]},
            {"name":"a","perm":[1,0],"sections":["e","a"]}],
            "generators":["a"],"inverses":{"a":"a"}}"#;
        assert!(matches!(parse_automaton(text), Err(Error::BadInverse(_, _))));
    }

    #[test]
    fn lamplighter_worked_example() {
        let l = catalog::automaton("lamplighter").unwrap();
        assert_eq!(l.act_word(&word(&l, "a"), &tw(&l, "10101")), tw(&l, "00110"));
    }

    #[test]
    fn identity_word_fixes_everything() {
        let g = catalog::automaton("grigorchuk").unwrap();
        let u = tw(&g, "0110");
        assert_eq!(g.act_word(&GroupWord::identity(), &u), u);
    }

    #[test]
    fn grigorchuk_b_on_101() {
        let g = catalog::automaton("grigorchuk").unwrap();
        assert_eq!(g.act_word(&word(&g, "b"), &tw(&g, "101")), tw(&g, "100"));
    }

    #[test]
    fn grigorchuk_sections() {
        let g = catalog::automaton("grigorchuk").unwrap();
        assert_eq!(g.section(&word(&g, "b"), &tw(&g, "0")), word(&g, "a"));
        assert_eq!(g.section(&word(&g, "ab"), &tw(&g, "0")), word(&g, "a"));
        let bc = word(&g, "bc");
        assert_eq!(g.section(&bc, &TreeWord::empty()), bc);
    }

    #[test]
    fn word_parsing_and_formatting() {
        let l = catalog::automaton("lamplighter").unwrap();
        let w = word(&l, "a^-1b a");
        assert_eq!(w.len(), 3);
        assert_eq!(l.format_word(&w), "a^-1 b a");
        assert!(l.parse_word("aq").is_err());
        assert!(word(&l, "e").is_empty());
    }

    #[test]
    fn level_transitivity() {
        let g = catalog::automaton("grigorchuk").unwrap();
        assert!(g.is_level_transitive(3));
        let h = catalog::automaton("hanoi").unwrap();
        assert!(h.is_level_transitive(2));
        let text = r#"{"alphabet":2,"states":[{"name":"e","perm":[0,1],"sections":["e","e"]}],"generators":["e"],"identity":"e"}"#;
        let id = parse_automaton(text).unwrap();
        assert!(!id.is_level_transitive(1));
        assert!(id.is_level_transitive(0));
    }

    #[test]
    fn tree_word_index_roundtrip() {
        let w = TreeWord::new(vec![2, 0, 1]);
        assert_eq!(w.to_index(3), 19);
        assert_eq!(TreeWord::from_index(19, 3, 3), w);
        assert_eq!(w.to_string(), "201");
        assert_eq!(TreeWord::empty().to_string(), "ε");
    }
}
