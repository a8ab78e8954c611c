use crate::types::{AckermannDeviationMap, VehicleParams};

/// Front wheel angles `(left, right)` for a mean steering angle.
///
/// Starts from the ideal Ackermann split for the turn radius `L / tan δ`
/// (measured at the rear-axle centre) and then applies the deviation map to
/// the inside wheel.
pub fn ackermann_angles(
    steering: f64,
    geometry: &VehicleParams,
    deviation: &AckermannDeviationMap,
) -> (f64, f64) {
    if steering == 0.0 {
        return (0.0, 0.0);
    }
    let wheelbase = geometry.wheelbase();
    let half_track = 0.5 * geometry.track_front;
    let radius = wheelbase / steering.tan();
    let left = (wheelbase / (radius - half_track)).atan();
    let right = (wheelbase / (radius + half_track)).atan();
    if steering > 0.0 {
        (left + deviation.deviation(left), right)
    } else {
        (left, right + deviation.deviation(right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_is_zero() {
        let p = VehicleParams::mid_size_sedan();
        assert_eq!(ackermann_angles(0.0, &p, &AckermannDeviationMap::new(-0.2).unwrap()), (0.0, 0.0));
    }

    #[test]
    fn ideal_split_for_five_metre_radius() {
        let p = VehicleParams::mid_size_sedan();
        let steering = (2.9f64 / 5.0).atan();
        let (l, r) = ackermann_angles(steering, &p, &AckermannDeviationMap::IDEAL);
        assert!((l - (2.9f64 / 4.2).atan()).abs() < 1e-12);
        assert!((r - (2.9f64 / 5.8).atan()).abs() < 1e-12);
        assert!((l - 0.6043).abs() < 1e-4 && (r - 0.4636).abs() < 1e-4);
    }

    #[test]
    fn zero_deviation_is_bitwise_ideal() {
        let p = VehicleParams::mid_size_sedan();
        for s in [-0.5, -0.1, 0.2, 0.45] {
            let a = ackermann_angles(s, &p, &AckermannDeviationMap::IDEAL);
            let b = ackermann_angles(s, &p, &AckermannDeviationMap::new(0.0).unwrap());
            assert_eq!(a.0.to_bits(), b.0.to_bits());
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }

    #[test]
    fn deviation_reduces_inside_wheel_and_mirrors() {
        let p = VehicleParams::mid_size_sedan();
        let dev = AckermannDeviationMap::new(-0.15).unwrap();
        let (l, r) = ackermann_angles(0.3, &p, &dev);
        let (li, ri) = ackermann_angles(0.3, &p, &AckermannDeviationMap::IDEAL);
        assert!(l < li && l > 0.0);
        assert_eq!(r, ri);
        let (ml, mr) = ackermann_angles(-0.3, &p, &dev);
        assert!((ml + r).abs() < 1e-15 && (mr + l).abs() < 1e-15);
    }
}
