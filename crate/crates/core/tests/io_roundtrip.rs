use fecg::io::{load_record, save_record, AnnotationKind, PeakList, Record, RecordFormat};

#[test]
fn record_and_annotations_survive_a_save_load_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let a: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0 / 7.0).collect();
    let b: Vec<f64> = (0..500).map(|i| -(i as f64).sqrt()).collect();
    let rec = Record::from_channels("r1", 250, vec![a, b])
        .unwrap()
        .with_annotation(AnnotationKind::FetalR, PeakList::new(vec![12.0, 404.5, 1500.25]).unwrap())
        .unwrap()
        .with_annotation(AnnotationKind::MaternalR, PeakList::new(vec![100.0]).unwrap())
        .unwrap();
    let path = save_record(&rec, dir.path()).unwrap();
    assert_eq!(RecordFormat::from_path(&path), RecordFormat::Csv);
    let back = load_record(&path, RecordFormat::Csv).unwrap();
    assert_eq!(back, rec);
}

#[test]
fn malformed_rows_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "fs=100\nch1,ch2\n1,2\n3\n").unwrap();
    let err = load_record(&path, RecordFormat::Csv).unwrap_err();
    assert!(err.is_data_error());
    assert!(err.to_string().contains(":4") || err.to_string().contains("line 4"), "{err}");
}

#[test]
fn missing_file_is_a_data_error() {
    let err = load_record(std::path::Path::new("/nonexistent/x.csv"), RecordFormat::Csv).unwrap_err();
    assert!(err.is_data_error());
}
