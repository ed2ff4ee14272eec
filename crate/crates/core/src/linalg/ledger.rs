/// Deterministic accounting of multiply-accumulate operations and live
/// real scalars for one solver run.
///
/// Every kernel charges its exact MAC count. Memory is model-based: callers
/// declare the vectors they hold with [`OpLedger::alloc`] / [`OpLedger::free`]
/// and kernels declare only their transient scratch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpLedger {
    macs: u64,
    peak_reals: u64,
    current_reals: u64,
}

impl OpLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn macs(&self) -> u64 {
        self.macs
    }

    pub fn peak_reals(&self) -> u64 {
        self.peak_reals
    }

    pub fn current_reals(&self) -> u64 {
        self.current_reals
    }

    /// Peak memory in bytes (64-bit reals).
    pub fn peak_bytes(&self) -> u64 {
        self.peak_reals * std::mem::size_of::<f64>() as u64
    }

    pub fn charge(&mut self, macs: u64) {
        self.macs += macs;
    }

    pub fn alloc(&mut self, reals: u64) {
        self.current_reals += reals;
        self.peak_reals = self.peak_reals.max(self.current_reals);
    }

    pub fn free(&mut self, reals: u64) {
        debug_assert!(reals <= self.current_reals, "freeing more reals than live");
        self.current_reals = self.current_reals.saturating_sub(reals);
    }
}
