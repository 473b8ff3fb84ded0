//! Generalised suffix automaton over integer symbols.
//!
//! Built online from several sequences (one per utterance); it recognises
//! exactly the contiguous subsequences of those sequences, never one that
//! spans two of them.

const ROOT: usize = 0;

#[derive(Debug, Clone)]
struct State {
    len: usize,
    link: Option<usize>,
    // sorted by symbol; states have few out-edges
    next: Vec<(u32, usize)>,
}

impl State {
    fn go(&self, symbol: u32) -> Option<usize> {
        self.next
            .binary_search_by_key(&symbol, |&(s, _)| s)
            .ok()
            .map(|i| self.next[i].1)
    }

    fn set(&mut self, symbol: u32, target: usize) {
        match self.next.binary_search_by_key(&symbol, |&(s, _)| s) {
            Ok(i) => self.next[i].1 = target,
            Err(i) => self.next.insert(i, (symbol, target)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuffixAutomaton {
    states: Vec<State>,
}

impl Default for SuffixAutomaton {
    fn default() -> Self {
        SuffixAutomaton {
            states: vec![State {
                len: 0,
                link: None,
                next: Vec::new(),
            }],
        }
    }
}

impl SuffixAutomaton {
    pub fn new<'a>(sequences: impl IntoIterator<Item = &'a [u32]>) -> Self {
        let mut sam = SuffixAutomaton::default();
        for seq in sequences {
            sam.add(seq);
        }
        sam
    }

    pub fn add(&mut self, seq: &[u32]) {
        let mut last = ROOT;
        for &symbol in seq {
            last = self.extend(last, symbol);
        }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    fn clone_state(&mut self, from: usize, q: usize) -> usize {
        let clone = self.states.len();
        let mut state = self.states[q].clone();
        state.len = self.states[from].len + 1;
        self.states.push(state);
        self.states[q].link = Some(clone);
        clone
    }

    fn redirect(&mut self, mut p: Option<usize>, symbol: u32, q: usize, clone: usize) {
        while let Some(i) = p {
            if self.states[i].go(symbol) != Some(q) {
                break;
            }
            self.states[i].set(symbol, clone);
            p = self.states[i].link;
        }
    }

    fn extend(&mut self, last: usize, symbol: u32) -> usize {
        // the extension already exists from an earlier sequence
        if let Some(q) = self.states[last].go(symbol) {
            if self.states[last].len + 1 == self.states[q].len {
                return q;
            }
            let clone = self.clone_state(last, q);
            self.redirect(Some(last), symbol, q, clone);
            return clone;
        }

        let cur = self.states.len();
        self.states.push(State {
            len: self.states[last].len + 1,
            link: None,
            next: Vec::new(),
        });
        let mut p = Some(last);
        while let Some(i) = p {
            if self.states[i].go(symbol).is_some() {
                break;
            }
            self.states[i].set(symbol, cur);
            p = self.states[i].link;
        }
        let link = match p {
            None => ROOT,
            Some(i) => {
                let q = self.states[i].go(symbol).expect("loop stopped on an edge");
                if self.states[i].len + 1 == self.states[q].len {
                    q
                } else {
                    let clone = self.clone_state(i, q);
                    self.redirect(Some(i), symbol, q, clone);
                    clone
                }
            }
        };
        self.states[cur].link = Some(link);
        cur
    }

    pub fn contains(&self, pattern: &[u32]) -> bool {
        let mut state = ROOT;
        for &symbol in pattern {
            match self.states[state].go(symbol) {
                Some(next) => state = next,
                None => return false,
            }
        }
        true
    }

    /// For every position `j` of `text`, the length of the longest substring
    /// ending at `j` that the automaton recognises.
    pub fn match_lengths(&self, text: &[u32]) -> Vec<usize> {
        let mut out = Vec::with_capacity(text.len());
        let mut state = ROOT;
        let mut len = 0;
        for &symbol in text {
            loop {
                if let Some(next) = self.states[state].go(symbol) {
                    state = next;
                    len += 1;
                    break;
                }
                match self.states[state].link {
                    Some(link) => {
                        state = link;
                        len = self.states[state].len;
                    }
                    None => {
                        len = 0;
                        break;
                    }
                }
            }
            out.push(len);
        }
        out
    }
}
