//! Aho-Corasick automaton over token sequences.
//!
//! Symbols are interned token surfaces; tokens that occur in no pattern send
//! the automaton back to the root, so one left-to-right pass reports every
//! occurrence of every pattern in time linear in the input plus output.

use std::collections::{HashMap, VecDeque};

const ROOT: u32 = 0;

#[derive(Debug, Clone, Default)]
struct State {
    next: HashMap<u32, u32>,
    fail: u32,
    /// Patterns ending here, including those reachable by failure links.
    outputs: Vec<u32>,
}

/// One pattern occurrence: token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub start: usize,
    pub end: usize,
    pub pattern: usize,
}

#[derive(Debug, Clone)]
pub struct TokenAutomaton {
    symbols: HashMap<String, u32>,
    states: Vec<State>,
    lengths: Vec<usize>,
}

impl TokenAutomaton {
    /// Builds the automaton. Pattern `i` is `patterns[i]`; empty patterns never match.
    pub fn new<P, T>(patterns: P) -> Self
    where
        P: IntoIterator<Item = T>,
        T: AsRef<[String]>,
    {
        let mut symbols: HashMap<String, u32> = HashMap::new();
        let mut states = vec![State::default()];
        let mut lengths = Vec::new();
        for (id, pattern) in patterns.into_iter().enumerate() {
            let pattern = pattern.as_ref();
            lengths.push(pattern.len());
            if pattern.is_empty() {
                continue;
            }
            let mut s = ROOT;
            for tok in pattern {
                let n = symbols.len() as u32;
                let sym = *symbols.entry(tok.clone()).or_insert(n);
                s = match states[s as usize].next.get(&sym) {
                    Some(&t) => t,
                    None => {
                        let t = states.len() as u32;
                        states.push(State::default());
                        states[s as usize].next.insert(sym, t);
                        t
                    }
                };
            }
            states[s as usize].outputs.push(id as u32);
        }

        // breadth-first failure links
        let mut queue = VecDeque::new();
        let root_children: Vec<u32> = states[0].next.values().copied().collect();
        for c in root_children {
            states[c as usize].fail = ROOT;
            queue.push_back(c);
        }
        while let Some(s) = queue.pop_front() {
            let edges: Vec<(u32, u32)> = states[s as usize].next.iter().map(|(&k, &v)| (k, v)).collect();
            for (sym, t) in edges {
                let mut f = states[s as usize].fail;
                let fail_target = loop {
                    if let Some(&n) = states[f as usize].next.get(&sym) {
                        break n;
                    }
                    if f == ROOT {
                        break ROOT;
                    }
                    f = states[f as usize].fail;
                };
                states[t as usize].fail = fail_target;
                let inherited = states[fail_target as usize].outputs.clone();
                states[t as usize].outputs.extend(inherited);
                queue.push_back(t);
            }
        }
        for st in states.iter_mut() {
            st.outputs.sort_unstable();
        }
        TokenAutomaton {
            symbols,
            states,
            lengths,
        }
    }

    pub fn pattern_count(&self) -> usize {
        self.lengths.len()
    }

    /// All occurrences, ordered by end position then pattern id.
    pub fn find_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Occurrence> {
        let mut out = Vec::new();
        let mut s = ROOT;
        for (i, tok) in tokens.iter().enumerate() {
            let Some(&sym) = self.symbols.get(tok.as_ref()) else {
                s = ROOT;
                continue;
            };
            s = loop {
                if let Some(&n) = self.states[s as usize].next.get(&sym) {
                    break n;
                }
                if s == ROOT {
                    break ROOT;
                }
                s = self.states[s as usize].fail;
            };
            for &p in &self.states[s as usize].outputs {
                let len = self.lengths[p as usize];
                out.push(Occurrence {
                    start: i + 1 - len,
                    end: i + 1,
                    pattern: p as usize,
                });
            }
        }
        out
    }
}
