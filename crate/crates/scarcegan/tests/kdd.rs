mod support;

use std::io::Write;

use scarcegan::encode::{encode_split, Encoder};
use scarcegan::kdd::{load_kdd, KddCategory};
use scarcegan::Error;
use support::{by_name, counts, fixture};

#[test]
fn fixture_counts_match_independent_scan() {
    let c = counts();
    let train = support::train();
    assert_eq!(train.len(), c.train_rows);
    assert_eq!(by_name(&train.counts()), c.train);
    let test = support::test();
    assert_eq!(test.len(), c.test_rows);
    assert_eq!(by_name(&test.counts()), c.test);
}

#[test]
fn dedup_matches_independent_scan() {
    let c = counts();
    let d = load_kdd(fixture("kdd_train.txt"), true).unwrap();
    assert_eq!(d.len(), c.train_rows_dedup);
    assert_eq!(by_name(&d.counts()), c.train_dedup);
}

#[test]
fn gzip_input_reads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let gz = dir.path().join("kdd_train.txt.gz");
    let raw = std::fs::read(fixture("kdd_train.txt")).unwrap();
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&gz).unwrap(), flate2::Compression::fast());
    enc.write_all(&raw).unwrap();
    enc.finish().unwrap();
    assert_eq!(load_kdd(&gz, false).unwrap(), support::train());
}

#[test]
fn malformed_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    let mut text = std::fs::read_to_string(fixture("kdd_train.txt")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.insert(4, "0,tcp,http,SF,1,2,normal.");
    text = lines.join("\n");
    std::fs::write(&path, text).unwrap();
    match load_kdd(&path, false) {
        Err(Error::Malformed { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected a malformed-line error, got {other:?}"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_kdd(fixture("nope.txt"), false), Err(Error::Io { .. })));
}

#[test]
fn test_only_attack_names_have_categories() {
    for (name, cat) in [
        ("snmpguess", KddCategory::R2l),
        ("mscan", KddCategory::Probe),
        ("apache2", KddCategory::Dos),
        ("httptunnel", KddCategory::U2r),
    ] {
        assert_eq!(KddCategory::of_label(name), Some(cat));
    }
}

#[test]
fn encoded_width_matches_scan() {
    let c = counts();
    let (enc, train, test) = encode_split(&support::train().records, &support::test().records).unwrap();
    assert_eq!(enc.vocab.iter().map(Vec::len).collect::<Vec<_>>(), c.vocab_sizes.to_vec());
    assert_eq!(enc.width(), c.encoded_width);
    assert_eq!(enc.width(), c.numeric_columns + c.vocab_sizes.iter().sum::<usize>() + 3);
    assert_eq!(train.x.cols(), enc.width());
    assert_eq!(test.x.cols(), enc.width());
    assert_eq!(enc.column_names().len(), enc.width());
}

#[test]
fn train_numerics_lie_in_unit_interval() {
    let (_, train, _) = encode_split(&support::train().records, &[]).unwrap();
    for row in train.x.row_iter() {
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn one_hot_blocks_have_exactly_one_bit() {
    let (enc, train, test) = encode_split(&support::train().records, &support::test().records).unwrap();
    for ds in [&train, &test] {
        for row in ds.x.row_iter() {
            let mut offset = 38;
            for v in &enc.vocab {
                let block = &row[offset..offset + v.len() + 1];
                assert_eq!(block.iter().filter(|x| **x == 1.0).count(), 1);
                assert_eq!(block.iter().filter(|x| **x == 0.0).count(), v.len());
                offset += v.len() + 1;
            }
        }
    }
}

#[test]
fn unseen_test_categories_use_the_bucket() {
    let records = support::test().records;
    let (enc, _, test) = encode_split(&support::train().records, &records).unwrap();
    let service_unseen = 38 + enc.vocab[0].len() + 1 + enc.vocab[1].len();
    for (r, row) in records.iter().zip(test.x.row_iter()) {
        let unseen = !enc.vocab[1].contains(&r.symbolic[1]);
        assert_eq!(row[service_unseen] == 1.0, unseen, "service {}", r.symbolic[1]);
    }
    assert!(records.iter().any(|r| r.symbolic[1] == "telnet"));
}

#[test]
fn metadata_round_trips_and_is_not_touched_by_test_encoding() {
    let enc = Encoder::fit(&support::train().records);
    let before = enc.checksum();
    let back = Encoder::from_json(&enc.to_json()).unwrap();
    assert_eq!(back, enc);
    assert_eq!(back.checksum(), before);
    enc.encode(&support::test().records).unwrap();
    assert_eq!(enc.checksum(), before);
}

#[test]
fn test_rows_do_not_influence_metadata() {
    let train = support::train().records;
    let a = Encoder::fit(&train);
    let (b, _, _) = encode_split(&train, &support::test().records).unwrap();
    assert_eq!(a.checksum(), b.checksum());
}

#[test]
fn class_counts_survive_encoding() {
    let data = support::train();
    let (_, train, _) = encode_split(&data.records, &[]).unwrap();
    for cat in KddCategory::ALL {
        let n = train.categories.iter().filter(|c| **c == cat).count();
        assert_eq!(n, data.counts()[&cat]);
    }
}

#[test]
fn empty_input_encodes_to_zero_rows() {
    let enc = Encoder::fit(&[]);
    assert_eq!(enc.width(), 38 + 3);
    assert_eq!(enc.encode(&[]).unwrap().len(), 0);
}
