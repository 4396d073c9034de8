//! Interned position identifiers.
//!
//! Positions name the coordinates of the function spaces `M^Y`: game states,
//! edges, state pairs, decomposition option slots. They are interned strings
//! with a stable *content* order, so every set iteration, argmin/argmax
//! tie-break and printed listing is deterministic across runs.

use std::collections::HashSet;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// An interned position identifier. Cheap to clone; ordered by string
/// content (not by interning order).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos(Arc<str>);

fn intern_table() -> &'static Mutex<HashSet<Arc<str>>> {
    static TABLE: OnceLock<Mutex<HashSet<Arc<str>>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(HashSet::new()))
}

impl Pos {
    pub fn new(name: impl AsRef<str>) -> Pos {
        let name = name.as_ref();
        let mut table = intern_table().lock().unwrap();
        if let Some(existing) = table.get(name) {
            return Pos(existing.clone());
        }
        let arc: Arc<str> = Arc::from(name);
        table.insert(arc.clone());
        Pos(arc)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Position for the directed edge `src -> tgt`. State identifiers never
    /// contain `>` so this cannot collide with a state position.
    pub fn edge(src: &Pos, tgt: &Pos) -> Pos {
        Pos::new(format!("{}->{}", src.as_str(), tgt.as_str()))
    }

    /// Position for the ordered state pair `(a, b)`.
    pub fn pair(a: &Pos, b: &Pos) -> Pos {
        Pos::new(format!("({},{})", a.as_str(), b.as_str()))
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for Pos {
    fn from(s: &str) -> Pos {
        Pos::new(s)
    }
}

impl From<String> for Pos {
    fn from(s: String) -> Pos {
        Pos::new(s)
    }
}
