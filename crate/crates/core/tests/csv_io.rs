use std::io::Write;

use iotids_core::data::{load_csv, split_train_test, LabelColumn, SplitSpec};
use iotids_core::Error;

fn write(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn loads_named_label_column() {
    let f = write("label,dur,bytes\n0,1.5,10\n1,0.25,3e2\n0,-2,+7\n");
    let t = load_csv(f.path(), &LabelColumn::parse("label")).unwrap();
    assert_eq!(t.feature_names(), ["dur", "bytes"]);
    assert_eq!(t.labels(), [0, 1, 0]);
    assert_eq!(t.row(1), [0.25, 300.0]);
    assert_eq!(t.row(2), [-2.0, 7.0]);
}

#[test]
fn default_label_is_last_column() {
    let f = write("a,b,y\n1,2,1\n3,4,0\n");
    let t = load_csv(f.path(), &LabelColumn::Last).unwrap();
    assert_eq!(t.n_features(), 2);
    assert_eq!(t.labels(), [1, 0]);
}

#[test]
fn reports_offending_line() {
    let f = write("a,y\n1,0\n2,1\nnan,0\n");
    match load_csv(f.path(), &LabelColumn::Last) {
        Err(Error::ParseCell { line, column, value }) => {
            assert_eq!((line, column.as_str(), value.as_str()), (4, "a", "nan"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let f = write("a,y\n1,0\n2\n");
    assert!(matches!(
        load_csv(f.path(), &LabelColumn::Last),
        Err(Error::RaggedRow {
            line: 3,
            expected: 2,
            found: 1
        })
    ));
    let f = write("a,y\n1,2\n");
    assert!(matches!(
        load_csv(f.path(), &LabelColumn::Last),
        Err(Error::InvalidLabel { line: 2, .. })
    ));
}

#[test]
fn rejects_bad_headers_and_missing_files() {
    let f = write("a,a,y\n1,2,0\n");
    assert!(matches!(
        load_csv(f.path(), &LabelColumn::Last),
        Err(Error::DuplicateHeader(_))
    ));
    let f = write("a,y\n1,0\n");
    assert!(matches!(
        load_csv(f.path(), &LabelColumn::parse("class")),
        Err(Error::UnknownLabelColumn(_))
    ));
    let f = write("a,y\n");
    assert!(load_csv(f.path(), &LabelColumn::Last).is_err());
    assert!(matches!(
        load_csv("/nonexistent/x.csv", &LabelColumn::Last),
        Err(Error::Io { .. })
    ));
}

#[test]
fn split_of_loaded_file_is_reproducible() {
    let mut body = String::from("x,y\n");
    for i in 0..100 {
        body.push_str(&format!("{i},{}\n", u8::from(i % 4 == 0)));
    }
    let f = write(&body);
    let t = load_csv(f.path(), &LabelColumn::Last).unwrap();
    let spec = SplitSpec {
        test_fraction: 0.2,
        seed: 5,
        stratified: true,
    };
    let (train, test) = split_train_test(&t, &spec).unwrap();
    assert_eq!(test.n_rows(), 20);
    assert_eq!(test.class_counts(), [15, 5]);
    assert_eq!(train.n_rows(), 80);
    assert_eq!(split_train_test(&t, &spec).unwrap(), (train, test));
}
