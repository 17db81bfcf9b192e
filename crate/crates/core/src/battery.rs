//! The shipped example battery.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::symbols::{AnalyticSymbol, Role, SymbolQuadruple};

/// Expected behaviour of a battery case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Zero,
    Compact,
    BoundedNonCompact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryCase {
    pub name: &'static str,
    pub category: Category,
    pub symbols: SymbolQuadruple,
}

/// A triple `(u, phi, psi)` for the Hardy-space comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyCase {
    pub name: &'static str,
    pub category: Category,
    pub u: AnalyticSymbol,
    pub phi: AnalyticSymbol,
    pub psi: AnalyticSymbol,
}

fn poly(c: &[f64]) -> AnalyticSymbol {
    AnalyticSymbol::poly_real(c, Role::Weight)
}

fn lft(a: f64, b: f64, c: f64, d: f64) -> Result<AnalyticSymbol> {
    let r = |x: f64| Complex64::new(x, 0.0);
    AnalyticSymbol::lft(r(a), r(b), r(c), r(d), Role::SelfMap)
}

fn case(name: &'static str, category: Category, u: AnalyticSymbol, v: AnalyticSymbol, phi: AnalyticSymbol, psi: AnalyticSymbol) -> Result<BatteryCase> {
    Ok(BatteryCase { name, category, symbols: SymbolQuadruple::new(u, v, phi, psi)? })
}

/// Quadruples `(u, v, phi, psi)` spanning zero, compact and bounded non-compact differences.
pub fn battery() -> Result<Vec<BatteryCase>> {
    use Category::*;
    Ok(vec![
        case("zero-dilation", Zero, poly(&[1.0]), poly(&[1.0]), poly(&[0.0, 0.5]), poly(&[0.0, 0.5]))?,
        case("zero-identity", Zero, poly(&[1.0]), poly(&[1.0]), poly(&[0.0, 1.0]), poly(&[0.0, 1.0]))?,
        case("zero-weighted-quadratic", Zero, poly(&[1.0, 0.5]), poly(&[1.0, 0.5]), poly(&[0.1, 0.4, 0.3]), poly(&[0.1, 0.4, 0.3]))?,
        case("single-dilation", Compact, poly(&[1.0]), poly(&[0.0]), poly(&[0.0, 0.5]), poly(&[0.0]))?,
        case("alternating-dilations", Compact, poly(&[1.0]), poly(&[1.0]), poly(&[0.0, 0.5]), poly(&[0.0, -0.5]))?,
        case("weighted-quadratic", Compact, poly(&[1.0, 0.5]), poly(&[1.0]), poly(&[0.0, 0.5, 0.3]), poly(&[0.0, 1.0 / 3.0]))?,
        case("fractional-dilation", Compact, poly(&[1.0]), poly(&[1.0]), lft(1.0, 0.0, -1.0, 3.0)?, poly(&[0.0, 0.4]))?,
        case("monomial-weight", Compact, poly(&[0.0, 0.0, 0.0, 1.0]), poly(&[0.0]), poly(&[0.0, 0.5]), poly(&[0.0]))?,
        case("identity", BoundedNonCompact, poly(&[1.0]), poly(&[0.0]), poly(&[0.0, 1.0]), poly(&[0.0]))?,
        case("identity-minus-dilation", BoundedNonCompact, poly(&[1.0]), poly(&[1.0]), poly(&[0.0, 1.0]), poly(&[0.0, 0.9]))?,
        case("boundary-contact", BoundedNonCompact, poly(&[1.0]), poly(&[0.0]), poly(&[0.5, 0.5]), poly(&[0.0]))?,
        case("identity-minus-contact", BoundedNonCompact, poly(&[1.0]), poly(&[1.0]), poly(&[0.0, 1.0]), poly(&[0.5, 0.5]))?,
        case("multiplier", BoundedNonCompact, poly(&[1.0]), poly(&[0.0, 1.0]), poly(&[0.0, 1.0]), poly(&[0.0, 1.0]))?,
        case("contact-with-vanishing-weight", Compact, poly(&[1.0, -1.0]), poly(&[0.0]), poly(&[0.5, 0.5]), poly(&[0.0]))?,
    ])
}

/// Triples for the Hardy-space comparison.
pub fn hardy_battery() -> Result<Vec<HardyCase>> {
    use Category::*;
    let one = || poly(&[1.0]);
    let sm = |c: &[f64]| AnalyticSymbol::poly_real(c, Role::SelfMap);
    Ok(vec![
        HardyCase { name: "equal-dilations", category: Zero, u: one(), phi: sm(&[0.0, 0.5]), psi: sm(&[0.0, 0.5]) },
        HardyCase { name: "two-dilations", category: Compact, u: one(), phi: sm(&[0.0, 0.5]), psi: sm(&[0.0, 1.0 / 3.0]) },
        HardyCase { name: "equal-identities", category: Zero, u: one(), phi: sm(&[0.0, 1.0]), psi: sm(&[0.0, 1.0]) },
        HardyCase { name: "identity-minus-dilation", category: BoundedNonCompact, u: one(), phi: sm(&[0.0, 1.0]), psi: sm(&[0.0, 0.9]) },
        HardyCase { name: "weighted-quadratic", category: Compact, u: poly(&[1.0, 0.5]), phi: sm(&[0.0, 0.5]), psi: sm(&[0.0, 0.4, 0.2]) },
        HardyCase { name: "multiplier", category: BoundedNonCompact, u: poly(&[0.0, 1.0]), phi: sm(&[0.0, 1.0]), psi: sm(&[0.0, 1.0]) },
        HardyCase { name: "contact-minus-dilation", category: BoundedNonCompact, u: one(), phi: sm(&[0.5, 0.5]), psi: sm(&[0.0, 0.5]) },
    ])
}
