use zsnav_core::metrics::{rcs, MetricsError};

/// (seen, unseen, |s-u|/max(s,u)*100 worked by hand to 4 places)
const CELLS: [(f64, f64, f64); 18] = [
    (3.99, 5.19, 23.1214),
    (8.92, 11.93, 25.2305),
    (0.006, 0.043, 86.0465),
    (4.56, 5.79, 21.2435),
    (17.53, 27.63, 36.5545),
    (0.152, 0.248, 38.7097),
    (12.34, 14.97, 17.5685),
    (19.47, 24.46, 20.4007),
    (0.212, 0.450, 52.8889),
    (50.53, 14.40, 71.5021),
    (55.17, 28.20, 48.8853),
    (0.455, 0.072, 84.1758),
    (47.01, 27.89, 40.6722),
    (48.98, 34.51, 29.5427),
    (0.423, 0.218, 48.4634),
    (71.75, 46.98, 34.5226),
    (73.86, 51.07, 30.8557),
    (0.639, 0.337, 47.2613),
];

#[test]
fn table_cells_follow_the_formula() {
    for (seen, unseen, want) in CELLS {
        let got = rcs(seen, unseen).unwrap();
        assert!((got - want).abs() < 5e-5, "{seen}/{unseen}: {got}");
        assert_eq!(got, rcs(unseen, seen).unwrap());
    }
}

#[test]
fn printed_cells_that_agree() {
    assert!((rcs(50.53, 14.40).unwrap() - 71.50).abs() <= 0.01);
    assert!((rcs(3.99, 5.19).unwrap() - 23.12).abs() <= 0.01);
    assert!((rcs(19.47, 24.46).unwrap() - 20.40).abs() <= 0.01);
}

#[test]
fn zero_pair_is_undefined() {
    assert!(matches!(rcs(0.0, 0.0), Err(MetricsError::RcsUndefined)));
    assert_eq!(rcs(0.0, 5.0).unwrap(), 100.0);
}
