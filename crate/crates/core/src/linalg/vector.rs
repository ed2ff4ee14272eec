//! Instrumented level-1 kernels. Each charges one MAC per element.

use super::OpLedger;

pub fn dot(x: &[f64], y: &[f64], ledger: &mut OpLedger) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    ledger.charge(x.len() as u64);
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64], ledger: &mut OpLedger) {
    debug_assert_eq!(x.len(), y.len());
    ledger.charge(x.len() as u64);
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64], ledger: &mut OpLedger) -> f64 {
    ledger.charge(x.len() as u64);
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `x *= alpha`
pub fn scale(alpha: f64, x: &mut [f64], ledger: &mut OpLedger) {
    ledger.charge(x.len() as u64);
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

/// Uninstrumented 2-norm for diagnostics and test oracles.
pub fn norm2_plain(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot_plain(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_charge_length() {
        let mut ledger = OpLedger::new();
        let x = [1.0, 2.0, 3.0];
        let mut y = [1.0, 1.0, 1.0];
        assert_eq!(dot(&x, &y, &mut ledger), 6.0);
        axpy(2.0, &x, &mut y, &mut ledger);
        assert_eq!(y, [3.0, 5.0, 7.0]);
        assert!((norm2(&x, &mut ledger) - 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(ledger.macs(), 9);
    }
}
