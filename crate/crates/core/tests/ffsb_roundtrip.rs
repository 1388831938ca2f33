use featred::storage::ffsb::{decode, encode, MAGIC};
use featred::storage::{read_feature_file, read_header, write_feature_file};
use featred::{Error, LabeledFeatureSet};
use proptest::prelude::*;

fn feature_set() -> impl Strategy<Value = LabeledFeatureSet> {
    (1usize..6, 0usize..35, 1usize..12, any::<bool>()).prop_flat_map(|(classes, extra, dim, grouped)| {
        let n = classes + extra;
        (
            prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), n * dim),
            prop::collection::vec(0..classes, n),
            prop::collection::vec(any::<u32>(), n),
        )
            .prop_map(move |(feats, mut labels, groups)| {
                // every class needs at least one row
                labels[..classes].iter_mut().enumerate().for_each(|(c, l)| *l = c);
                let feats = feats.into_iter().map(f64::from).collect();
                LabeledFeatureSet::new(feats, dim, labels, classes, grouped.then_some(groups)).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn encode_decode_is_identity(data in feature_set()) {
        let bytes = encode(&data).unwrap();
        prop_assert_eq!(decode(&bytes).unwrap(), data);
    }

    #[test]
    fn truncation_is_a_size_error(data in feature_set(), cut in 1usize..64) {
        let bytes = encode(&data).unwrap();
        let keep = bytes.len().saturating_sub(cut).max(MAGIC.len());
        prop_assume!(keep < bytes.len());
        let is_size = matches!(decode(&bytes[..keep]), Err(Error::Size { .. }));
        prop_assert!(is_size);
    }
}

#[test]
fn file_round_trip_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.ffsb");
    let data = LabeledFeatureSet::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, vec![0, 1], 2, Some(vec![4, 5])).unwrap();
    write_feature_file(&data, &path).unwrap();
    assert_eq!(read_feature_file(&path).unwrap(), data);
    let (h, len) = read_header(&path).unwrap();
    assert_eq!((h.n_samples, h.dim, h.n_classes, h.has_groups), (2, 3, 2, true));
    assert_eq!(len, h.file_len().unwrap());
    assert_eq!(len, std::fs::metadata(&path).unwrap().len());
}

#[test]
fn missing_file_is_io() {
    assert!(read_feature_file("/definitely/not/here.ffsb").unwrap_err().is_io());
}
