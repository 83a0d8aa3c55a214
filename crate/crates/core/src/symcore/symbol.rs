//! Symbols and the per-model symbol table.
//!
//! Every model owns one table. Creation order is significant: it defines the
//! monomial order used by canonical forms, so tables are always built in the
//! same sequence (per coordinate: `q`, `dq`, `p_q`; then `tau`, `p_tau`; then
//! constants).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use super::SymError;

/// Name of the evolution parameter carried alongside the coordinates.
pub const TAU: &str = "tau";
/// Name of the momentum conjugate to [`TAU`].
pub const P_TAU: &str = "p_tau";
/// Prefix for generated velocity names.
pub const VELOCITY_PREFIX: &str = "d";
/// Prefix for generated momentum names.
pub const MOMENTUM_PREFIX: &str = "p_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Coordinate,
    Velocity,
    Momentum,
    ParameterTime,
    Constant,
}

impl SymbolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SymbolKind::Coordinate => "coordinate",
            SymbolKind::Velocity => "velocity",
            SymbolKind::Momentum => "momentum",
            SymbolKind::ParameterTime => "parameter-time",
            SymbolKind::Constant => "constant",
        }
    }
}

#[derive(Debug)]
struct SymbolData {
    id: u32,
    name: String,
    kind: SymbolKind,
    /// Coordinate (or parameter-time) a velocity or momentum belongs to.
    link: Option<u32>,
}

/// A named symbol. Cheap to clone; compares by creation index.
#[derive(Clone)]
pub struct Symbol(Arc<SymbolData>);

impl Symbol {
    pub fn id(&self) -> u32 {
        self.0.id
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.0.kind
    }

    pub fn link(&self) -> Option<u32> {
        self.0.link
    }

    pub fn is_velocity(&self) -> bool {
        self.0.kind == SymbolKind::Velocity
    }

    pub fn is_momentum(&self) -> bool {
        self.0.kind == SymbolKind::Momentum
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.id.cmp(&other.0.id)
    }
}

impl core::hash::Hash for Symbol {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.0.id.hash(state);
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.0.name, self.0.id)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name)
    }
}

/// Frozen symbol table of one model.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    by_name: BTreeMap<String, usize>,
    coordinates: Vec<usize>,
    constants: Vec<usize>,
}

/// Identifier rule shared with the expression grammar.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SymbolTable {
    /// Builds the table for a model with the given coordinate and constant
    /// names, generating velocities, momenta and the `tau`/`p_tau` pair.
    pub fn for_model(coordinates: &[&str], constants: &[&str]) -> Result<Self, SymError> {
        let mut table = SymbolTable {
            symbols: Vec::new(),
            by_name: BTreeMap::new(),
            coordinates: Vec::new(),
            constants: Vec::new(),
        };
        for name in coordinates.iter().chain(constants) {
            if !is_identifier(name) {
                return Err(SymError::InvalidName(name.to_string()));
            }
            if *name == TAU || *name == P_TAU {
                return Err(SymError::ReservedName(name.to_string()));
            }
        }
        for name in coordinates {
            let q = table.push(name.to_string(), SymbolKind::Coordinate, None)?;
            table.coordinates.push(q);
            let qid = q as u32;
            table.push(format!("{VELOCITY_PREFIX}{name}"), SymbolKind::Velocity, Some(qid))?;
            table.push(format!("{MOMENTUM_PREFIX}{name}"), SymbolKind::Momentum, Some(qid))?;
        }
        let t = table.push(TAU.to_string(), SymbolKind::ParameterTime, None)?;
        table.push(P_TAU.to_string(), SymbolKind::Momentum, Some(t as u32))?;
        for name in constants {
            let c = table.push(name.to_string(), SymbolKind::Constant, None)?;
            table.constants.push(c);
        }
        Ok(table)
    }

    fn push(&mut self, name: String, kind: SymbolKind, link: Option<u32>) -> Result<usize, SymError> {
        if self.by_name.contains_key(&name) {
            return Err(SymError::DuplicateName(name));
        }
        let id = self.symbols.len();
        self.by_name.insert(name.clone(), id);
        self.symbols.push(Symbol(Arc::new(SymbolData { id: id as u32, name, kind, link })));
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<&Symbol> {
        self.by_name.get(name).map(|&i| &self.symbols[i])
    }

    pub fn get(&self, id: u32) -> Option<&Symbol> {
        self.symbols.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter()
    }

    pub fn coordinates(&self) -> impl Iterator<Item = &Symbol> + '_ {
        self.coordinates.iter().map(move |&i| &self.symbols[i])
    }

    pub fn constants(&self) -> impl Iterator<Item = &Symbol> + '_ {
        self.constants.iter().map(move |&i| &self.symbols[i])
    }

    pub fn coordinate(&self, index: usize) -> &Symbol {
        &self.symbols[self.coordinates[index]]
    }

    pub fn coordinate_count(&self) -> usize {
        self.coordinates.len()
    }

    /// Velocity of coordinate `index`.
    pub fn velocity(&self, index: usize) -> &Symbol {
        &self.symbols[self.coordinates[index] + 1]
    }

    /// Momentum of coordinate `index`.
    pub fn momentum(&self, index: usize) -> &Symbol {
        &self.symbols[self.coordinates[index] + 2]
    }

    pub fn tau(&self) -> &Symbol {
        &self.symbols[self.coordinates.len() * 3]
    }

    pub fn p_tau(&self) -> &Symbol {
        &self.symbols[self.coordinates.len() * 3 + 1]
    }

    /// Momentum conjugate to a coordinate or to `tau`.
    pub fn momentum_of(&self, position: &Symbol) -> Option<&Symbol> {
        let offset = match position.kind() {
            SymbolKind::Coordinate => 2,
            SymbolKind::ParameterTime => 1,
            _ => return None,
        };
        self.symbols.get(position.id() as usize + offset)
    }

    /// Index of a coordinate symbol in the coordinate list.
    pub fn coordinate_index(&self, sym: &Symbol) -> Option<usize> {
        self.coordinates.iter().position(|&i| i == sym.id() as usize)
    }

    /// All canonical pairs `(position, momentum)`: every coordinate, then `(tau, p_tau)`.
    pub fn canonical_pairs(&self) -> Vec<(Symbol, Symbol)> {
        let mut pairs: Vec<(Symbol, Symbol)> = (0..self.coordinates.len())
            .map(|i| (self.coordinate(i).clone(), self.momentum(i).clone()))
            .collect();
        pairs.push((self.tau().clone(), self.p_tau().clone()));
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_names_and_links() {
        let t = SymbolTable::for_model(&["N", "a"], &["Lambda"]).unwrap();
        let names: Vec<&str> = t.iter().map(|s| s.name()).collect();
        assert_eq!(names, ["N", "dN", "p_N", "a", "da", "p_a", "tau", "p_tau", "Lambda"]);
        assert_eq!(t.velocity(1).link(), Some(t.coordinate(1).id()));
        assert_eq!(t.momentum(0).link(), Some(t.coordinate(0).id()));
        assert_eq!(t.p_tau().link(), Some(t.tau().id()));
        assert_eq!(t.momentum_of(t.tau()).unwrap().name(), "p_tau");
        assert_eq!(t.momentum_of(t.coordinate(1)).unwrap().name(), "p_a");
    }

    #[test]
    fn rejects_clashes() {
        assert!(matches!(SymbolTable::for_model(&["x", "dx"], &[]), Err(SymError::DuplicateName(n)) if n == "dx"));
        assert!(matches!(SymbolTable::for_model(&["tau"], &[]), Err(SymError::ReservedName(_))));
        assert!(matches!(SymbolTable::for_model(&["x"], &["x"]), Err(SymError::DuplicateName(_))));
        assert!(matches!(SymbolTable::for_model(&["2x"], &[]), Err(SymError::InvalidName(_))));
    }
}
