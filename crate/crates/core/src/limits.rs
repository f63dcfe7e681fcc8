/// Resource caps for the exact enumeration engines.
///
/// Everything in this crate works by exhausting the space of 2^ell source
/// assignments, so the caps below are the knobs that keep runs at desk
/// scale. `KEYCAST_ENUM_CAP` and `KEYCAST_BUDGET` override the first and
/// last fields in the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum total source bits ell for full assignment enumeration.
    pub enum_cap: u32,
    /// Maximum ell for the two-stage witness subset scan.
    pub witness_cap: u32,
    /// Maximum ell accepted by a search shape.
    pub search_cap: u32,
    /// Maximum encoder candidates a search may visit in one run.
    pub budget: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enum_cap: 24,
            witness_cap: 16,
            search_cap: 12,
            budget: 1 << 20,
        }
    }
}

impl Limits {
    pub fn check_enum(&self, total_bits: u32, what: &str) -> crate::Result<()> {
        if total_bits > self.enum_cap {
            return Err(crate::Error::SpaceLimit(format!(
                "{what} needs 2^{total_bits} assignments, cap is 2^{}",
                self.enum_cap
            )));
        }
        Ok(())
    }
}
