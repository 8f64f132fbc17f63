use std::collections::HashMap;
use std::fmt;

use super::Sentence;

/// A structural problem in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TreeViolation {
    /// Node ids are not `1..=n` in order; `expected` is the first missing id.
    IdGap {
        expected: usize,
    },
    NoRoot,
    MultipleRoots,
    /// A cycle, reported once at its smallest id.
    Cycle {
        at: usize,
    },
    DanglingHead {
        id: usize,
        head: usize,
    },
    /// `root` label without head 0, or head 0 without the `root` label.
    RootLabel {
        id: usize,
    },
    EmptyDeprel {
        id: usize,
    },
    MwtOutOfBounds {
        first: usize,
        last: usize,
    },
    MwtOverlap {
        a: (usize, usize),
        b: (usize, usize),
    },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::IdGap { expected } => write!(f, "id gap at {expected}"),
            TreeViolation::NoRoot => write!(f, "no root"),
            TreeViolation::MultipleRoots => write!(f, "multiple roots"),
            TreeViolation::Cycle { at } => write!(f, "cycle at {at}"),
            TreeViolation::DanglingHead { id, head } => {
                write!(f, "dangling head {head} at {id}")
            }
            TreeViolation::RootLabel { id } => write!(f, "root label mismatch at {id}"),
            TreeViolation::EmptyDeprel { id } => write!(f, "empty deprel at {id}"),
            TreeViolation::MwtOutOfBounds { first, last } => {
                write!(f, "multiword token {first}-{last} out of bounds")
            }
            TreeViolation::MwtOverlap { a, b } => {
                write!(f, "overlapping multiword tokens {}-{} and {}-{}", a.0, a.1, b.0, b.1)
            }
        }
    }
}

/// Lists every structural problem; an empty list means a well-formed tree.
pub fn validate_tree(s: &Sentence) -> Vec<TreeViolation> {
    let mut out = Vec::new();

    if let Some(pos) = s.nodes.iter().enumerate().position(|(i, n)| n.id != i + 1) {
        out.push(TreeViolation::IdGap { expected: pos + 1 });
    }

    let roots = s.nodes.iter().filter(|n| n.head == 0).count();
    match roots {
        0 if !s.nodes.is_empty() => out.push(TreeViolation::NoRoot),
        0 | 1 => {}
        _ => out.push(TreeViolation::MultipleRoots),
    }

    let by_id: HashMap<usize, usize> = s.nodes.iter().map(|n| (n.id, n.head)).collect();
    for n in &s.nodes {
        if n.head != 0 && !by_id.contains_key(&n.head) {
            out.push(TreeViolation::DanglingHead { id: n.id, head: n.head });
        }
        if n.deprel.is_empty() || n.deprel == "_" {
            out.push(TreeViolation::EmptyDeprel { id: n.id });
        } else if (n.head == 0) != (n.deprel == "root") {
            out.push(TreeViolation::RootLabel { id: n.id });
        }
    }

    // 0 = unvisited, 1 = on the current path, 2 = finished.
    let mut state: HashMap<usize, u8> = HashMap::new();
    for n in &s.nodes {
        let mut path = Vec::new();
        let mut cur = n.id;
        loop {
            match state.get(&cur).copied().unwrap_or(0) {
                2 => break,
                1 => {
                    let start = path.iter().position(|&p| p == cur).unwrap_or(0);
                    let at = path[start..].iter().copied().min().unwrap_or(cur);
                    out.push(TreeViolation::Cycle { at });
                    break;
                }
                _ => {}
            }
            state.insert(cur, 1);
            path.push(cur);
            match by_id.get(&cur) {
                Some(&head) if head != 0 && by_id.contains_key(&head) => cur = head,
                _ => break,
            }
        }
        for p in path {
            state.insert(p, 2);
        }
    }

    let len = s.nodes.len();
    for m in &s.mwt {
        if m.first == 0 || m.last > len || m.first >= m.last {
            out.push(TreeViolation::MwtOutOfBounds {
                first: m.first,
                last: m.last,
            });
        }
    }
    for (i, a) in s.mwt.iter().enumerate() {
        for b in &s.mwt[i + 1..] {
            if a.first <= b.last && b.first <= a.last {
                out.push(TreeViolation::MwtOverlap {
                    a: (a.first, a.last),
                    b: (b.first, b.last),
                });
            }
        }
    }
    out
}
