mod common;

use common::{random_amplitude, random_complex};
use ndarray::Array2;
use proptest::prelude::*;
use sarfx::raster::{
    axis_offsets, decode_raster, encode_raster, read_amplitude, read_complex, read_mask, tile, write_raster,
    AmplitudeImage, Raster, TamperMask, HEADER_LEN,
};
use sarfx::Error;

#[test]
fn amplitude_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.sarf");
    let img = random_amplitude(13, 7, 4000.0, 1);
    write_raster(&img.clone().into(), &path).unwrap();
    let back = read_amplitude(&path).unwrap();
    assert_eq!(back, img);
    assert_eq!(back.dynamic_range_bits(), 16);
}

#[test]
fn complex_round_trips_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.sarf");
    let img = random_complex(5, 9, 2);
    write_raster(&img.clone().into(), &path).unwrap();
    let back = read_complex(&path).unwrap();
    for (a, b) in back.re().iter().zip(img.re()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    for (a, b) in back.im().iter().zip(img.im()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn one_pixel_file_has_header_plus_one_value() {
    let img = AmplitudeImage::filled(1, 1, 42.0).unwrap();
    let bytes = encode_raster(&img.into());
    assert_eq!(bytes.len(), HEADER_LEN + 8);
    assert_eq!(&bytes[..4], b"SARF");
    assert_eq!(bytes[4], 1);
    assert_eq!(bytes[5], 16);
    assert!(bytes[6..16].iter().all(|&b| b == 0));
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1);
    assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 42.0);
}

#[test]
fn mask_is_stored_as_bytes() {
    let mut v = Array2::zeros((3, 4));
    v[(1, 2)] = 1;
    v[(2, 0)] = 1;
    let mask = TamperMask::new(v).unwrap();
    let bytes = encode_raster(&mask.clone().into());
    assert_eq!(bytes.len(), HEADER_LEN + 12);
    assert_eq!(bytes[4], 3);
    assert_eq!(&bytes[HEADER_LEN..], &[0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0]);
    assert_eq!(decode_raster(&bytes).unwrap(), Raster::Mask(mask));
}

#[test]
fn complex_payload_is_real_plane_then_imaginary_plane() {
    let img = random_complex(2, 3, 3);
    let bytes = encode_raster(&img.clone().into());
    assert_eq!(bytes.len(), HEADER_LEN + 2 * 6 * 8);
    let at = |k: usize| f64::from_le_bytes(bytes[HEADER_LEN + 8 * k..HEADER_LEN + 8 * k + 8].try_into().unwrap());
    assert_eq!(at(0), img.re()[(0, 0)]);
    assert_eq!(at(5), img.re()[(1, 2)]);
    assert_eq!(at(6), img.im()[(0, 0)]);
    assert_eq!(at(11), img.im()[(1, 2)]);
}

#[test]
fn bad_headers_are_rejected() {
    let good = encode_raster(&AmplitudeImage::filled(2, 2, 1.0).unwrap().into());

    assert!(matches!(decode_raster(&good[..20]), Err(Error::MalformedHeader(_))));

    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    assert!(matches!(decode_raster(&bad_magic), Err(Error::MalformedHeader(_))));

    let mut bad_kind = good.clone();
    bad_kind[4] = 9;
    assert!(matches!(decode_raster(&bad_kind), Err(Error::MalformedHeader(_))));

    let mut zero_height = good.clone();
    zero_height[16..24].copy_from_slice(&0u64.to_le_bytes());
    assert!(matches!(decode_raster(&zero_height), Err(Error::MalformedHeader(_))));

    let mut huge = good.clone();
    huge[16..24].copy_from_slice(&u64::MAX.to_le_bytes());
    huge[24..32].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(decode_raster(&huge).is_err());
}

#[test]
fn payload_length_is_checked() {
    let good = encode_raster(&AmplitudeImage::filled(2, 2, 1.0).unwrap().into());
    let short = &good[..good.len() - 1];
    assert!(matches!(
        decode_raster(short),
        Err(Error::PayloadSize {
            expected: 32,
            actual: 31
        })
    ));
    let mut long = good.clone();
    long.push(0);
    assert!(matches!(decode_raster(&long), Err(Error::PayloadSize { .. })));
}

#[test]
fn invalid_values_are_rejected_on_read() {
    let mut bytes = encode_raster(&AmplitudeImage::filled(1, 2, 1.0).unwrap().into());
    bytes[HEADER_LEN + 8..].copy_from_slice(&(-3.0f64).to_le_bytes());
    assert!(matches!(
        decode_raster(&bytes),
        Err(Error::NegativeAmplitude { row: 0, col: 1, .. })
    ));
    bytes[HEADER_LEN + 8..].copy_from_slice(&f64::INFINITY.to_le_bytes());
    assert!(matches!(
        decode_raster(&bytes),
        Err(Error::NonFinite { row: 0, col: 1 })
    ));

    let mut mask = encode_raster(&TamperMask::empty(1, 2).unwrap().into());
    mask[HEADER_LEN] = 2;
    assert!(decode_raster(&mask).is_err());
}

#[test]
fn reading_the_wrong_kind_names_both_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.sarf");
    write_raster(&TamperMask::empty(2, 2).unwrap().into(), &path).unwrap();
    match read_amplitude(&path) {
        Err(Error::KindMismatch { expected, found, .. }) => {
            assert_eq!(expected, "amplitude_f64");
            assert_eq!(found, "mask_u8");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(read_mask(&path).is_ok());
    assert!(read_complex(&path).is_err());
}

#[test]
fn quantize_rounds_and_checks_range() {
    let v = Array2::from_shape_vec((1, 3), vec![0.4, 1.5, 65535.0]).unwrap();
    let img = AmplitudeImage::from_values(v).unwrap();
    assert_eq!(img.quantize().unwrap().into_raw_vec_and_offset().0, vec![0, 2, 65535]);
    let over = AmplitudeImage::filled(1, 1, 65535.6).unwrap();
    assert!(over.quantize().is_err());
}

#[test]
fn tiling_counts_and_offsets() {
    assert_eq!(axis_offsets(2048, 1024, 512).unwrap(), vec![0, 512, 1024]);
    assert_eq!(axis_offsets(1024, 1024, 512).unwrap(), vec![0]);
    assert_eq!(axis_offsets(1500, 1024, 0).unwrap(), vec![0]);
    assert!(axis_offsets(1000, 1024, 0).is_err());
    assert!(axis_offsets(100, 10, 10).is_err());
    assert!(axis_offsets(100, 0, 0).is_err());

    let img = random_amplitude(40, 56, 10.0, 4);
    let tiles = tile(&img, 16, 8).unwrap();
    assert_eq!(tiles.len(), 4 * 6);
    let t = &tiles[7];
    assert_eq!((t.row_offset, t.col_offset), (8, 8));
    assert_eq!(t.image.values()[(3, 5)], img.values()[(11, 13)]);
}

#[test]
fn tiling_masks_and_complex_rasters() {
    let img = random_complex(20, 20, 5);
    let tiles = tile(&img, 10, 0).unwrap();
    assert_eq!(tiles.len(), 4);
    assert_eq!(tiles[3].image.im()[(0, 0)], img.im()[(10, 10)]);
    let mask = TamperMask::empty(20, 20).unwrap();
    assert_eq!(tile(&mask, 20, 5).unwrap().len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encode_decode_is_identity(h in 1usize..16, w in 1usize..16, seed in any::<u64>(), bits in 1u8..=32) {
        let values = common::uniform_plane(h, w, 1.0, seed);
        let img = AmplitudeImage::new(values, bits).unwrap();
        let raster = Raster::from(img);
        prop_assert_eq!(decode_raster(&encode_raster(&raster)).unwrap(), raster);
    }

    #[test]
    fn tiles_cover_expected_windows(h in 1usize..64, w in 1usize..64, size in 1usize..32, overlap in 0usize..31) {
        prop_assume!(overlap < size && size <= h && size <= w);
        let img = random_amplitude(h, w, 1.0, 9);
        let tiles = tile(&img, size, overlap).unwrap();
        let stride = size - overlap;
        let expect = ((h - size) / stride + 1) * ((w - size) / stride + 1);
        prop_assert_eq!(tiles.len(), expect);
        for t in &tiles {
            prop_assert_eq!(t.image.dim(), (size, size));
            prop_assert!(t.row_offset + size <= h && t.col_offset + size <= w);
            prop_assert_eq!(t.image.values()[(size - 1, 0)], img.values()[(t.row_offset + size - 1, t.col_offset)]);
        }
    }
}
