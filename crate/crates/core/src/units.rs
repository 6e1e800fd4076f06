//! SI constants and conversions into the ħ = 1 (rad/s) convention.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.0545718e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Dipole coupling strength in rad/s per (V/m) for a dipole moment in C·m.
pub fn dipole_to_coupling(dipole_c_m: f64) -> f64 {
    dipole_c_m / HBAR
}

/// Rabi frequency μE/ħ in rad/s.
pub fn rabi_frequency(dipole_c_m: f64, field_v_per_m: f64) -> f64 {
    dipole_c_m * field_v_per_m / HBAR
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calcium_rabi_frequency() {
        // 2.4e-29 C·m × 1e7 V/m / ħ
        let omega = rabi_frequency(2.4e-29, 1e7);
        assert!((omega - 2.275805213073e12).abs() / omega < 1e-12);
        assert_eq!(dipole_to_coupling(2.4e-29) * 1e7, omega);
    }
}
