use flowibp_cli::report::{format_number, write_csv, write_json, COLUMNS};
use flowibp_cli::{ReportRow, Status};

fn row(z: f64, status: Status) -> ReportRow {
    ReportRow {
        experiment: "pathspace_ibp".into(),
        manifold: "sphere2".into(),
        system: "sphere2-bm".into(),
        functional: "pairdot@0.5,1".into(),
        h: "h:linear".into(),
        horizon: 1.0,
        n: 100_000,
        m: 512,
        seed: 7,
        lhs: 0.1 + 0.2,
        lhs_se: 1e-3,
        rhs: -1.0 / 3.0,
        rhs_se: 2e-3,
        diff: 0.6333,
        diff_se: 0.6333 / z,
        z,
        status,
        wall_ms: 12,
        message: None,
    }
}

#[test]
fn csv_columns_and_status() {
    let mut out = Vec::new();
    write_csv(&[row(1.5, Status::Pass), row(5.2, Status::Fail)], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, COLUMNS);
    assert_eq!(
        header.join(","),
        "experiment,manifold,system,functional,h,T,n,m,seed,lhs,lhs_se,rhs,rhs_se,diff,diff_se,z,status,wall_ms"
    );
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(&records[0][16], "pass");
    assert_eq!(&records[1][16], "fail");
    assert_eq!(&records[1][15], "5.2000000000000002e0");
    assert_eq!(&records[0][3], "pairdot@0.5,1");
    // 17 significant digits round-trip exactly.
    assert_eq!(records[0][9].parse::<f64>().unwrap(), 0.1 + 0.2);
    assert_eq!(records[0][11].parse::<f64>().unwrap(), -1.0 / 3.0);
}

#[test]
fn json_mirrors_csv_strings() {
    let rows = [row(1.5, Status::Pass), row(5.2, Status::Fail)];
    let mut csv_out = Vec::new();
    write_csv(&rows, &mut csv_out).unwrap();
    let mut json_out = Vec::new();
    write_json(&rows, &mut json_out).unwrap();
    let json = String::from_utf8(json_out).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let mut reader = csv::Reader::from_reader(csv_out.as_slice());
    for (record, obj) in reader.records().zip(doc.as_array().unwrap()) {
        let record = record.unwrap();
        let keys: Vec<&String> = obj.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), COLUMNS.len());
        for (i, name) in COLUMNS.iter().enumerate() {
            let v = &obj[*name];
            if let Some(s) = v.as_str() {
                assert_eq!(s, &record[i], "{name}");
            } else {
                // Numeric literals appear verbatim in the JSON text.
                assert!(json.contains(&format!("\"{name}\": {}", &record[i])), "{name}");
                assert_eq!(v.as_f64().unwrap(), record[i].parse::<f64>().unwrap(), "{name}");
            }
        }
    }
}

#[test]
fn non_finite_numbers() {
    assert_eq!(format_number(f64::NAN), "NaN");
    assert_eq!(format_number(f64::INFINITY), "inf");
    assert_eq!(format_number(1.0), "1.0000000000000000e0");
    let mut r = row(1.0, Status::Error);
    r.z = f64::NAN;
    r.lhs = f64::NEG_INFINITY;
    let mut out = Vec::new();
    write_json(&[r], &mut out).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(doc[0]["z"], "NaN");
    assert_eq!(doc[0]["lhs"], "-inf");
    assert_eq!(doc[0]["status"], "error");
}

#[test]
fn empty_report_has_only_the_header() {
    let mut out = Vec::new();
    write_csv(&[], &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
    let mut out = Vec::new();
    write_json(&[], &mut out).unwrap();
    assert_eq!(serde_json::from_slice::<serde_json::Value>(&out).unwrap(), serde_json::json!([]));
}
