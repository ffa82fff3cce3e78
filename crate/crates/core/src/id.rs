//! Configuration identifiers with alphanumeric-aware ordering.

use std::cmp::Ordering;
use std::fmt;

/// Identifier of a GOP configuration, e.g. `S1` or `S216`.
///
/// Ordering is alphanumeric-aware: digit runs compare by numeric value, so
/// `S2 < S10 < S100`. Ties (as in `S01` vs `S1`) fall back to plain string
/// order, keeping the ordering total and consistent with equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigId(String);

impl ConfigId {
    pub fn new(id: impl Into<String>) -> Self {
        ConfigId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConfigId {
    fn from(s: &str) -> Self {
        ConfigId::new(s)
    }
}

impl Ord for ConfigId {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ConfigId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compare two strings chunk-wise, treating digit runs as numbers.
///
/// Also used for `Pareto_Id` ordering in the relational store.
pub(crate) fn natural_cmp(a: &str, b: &str) -> Ordering {
    let mut ia = a.as_bytes();
    let mut ib = b.as_bytes();
    loop {
        match (ia.first(), ib.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(&ca), Some(&cb)) => {
                if ca.is_ascii_digit() && cb.is_ascii_digit() {
                    let (na, ra) = take_digits(ia);
                    let (nb, rb) = take_digits(ib);
                    match cmp_digits(na, nb) {
                        Ordering::Equal => {
                            ia = ra;
                            ib = rb;
                        }
                        ord => return ord,
                    }
                } else {
                    match ca.cmp(&cb) {
                        Ordering::Equal => {
                            ia = &ia[1..];
                            ib = &ib[1..];
                        }
                        ord => return ord,
                    }
                }
            }
        }
    }
}

fn take_digits(s: &[u8]) -> (&[u8], &[u8]) {
    let end = s.iter().position(|c| !c.is_ascii_digit()).unwrap_or(s.len());
    s.split_at(end)
}

/// Numeric comparison of digit runs without overflow: strip leading zeros,
/// compare lengths, then the digits themselves.
fn cmp_digits(a: &[u8], b: &[u8]) -> Ordering {
    let a = trim_zeros(a);
    let b = trim_zeros(b);
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn trim_zeros(s: &[u8]) -> &[u8] {
    let start = s.iter().position(|&c| c != b'0').unwrap_or(s.len());
    &s[start..]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_runs_compare_by_value() {
        let mut ids: Vec<ConfigId> = ["S100", "S2", "S10", "S1", "S216"]
            .iter()
            .map(|s| ConfigId::new(*s))
            .collect();
        ids.sort();
        let sorted: Vec<&str> = ids.iter().map(|i| i.as_str()).collect();
        assert_eq!(sorted, vec!["S1", "S2", "S10", "S100", "S216"]);
    }

    #[test]
    fn mixed_and_padded_ids_stay_totally_ordered() {
        assert_eq!(natural_cmp("P0031", "P010"), Ordering::Greater);
        assert_eq!(natural_cmp("P001", "P1"), Ordering::Equal);
        // equality fallback keeps Ord consistent with Eq
        assert_eq!(ConfigId::new("P001").cmp(&ConfigId::new("P1")), "P001".cmp("P1"));
        assert_eq!(ConfigId::new("A2").cmp(&ConfigId::new("B1")), Ordering::Less);
    }
}
