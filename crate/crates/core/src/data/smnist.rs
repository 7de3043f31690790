use alloc::format;
use alloc::vec::Vec;

use super::LabeledSample;
use crate::error::{Error, Result};
use crate::stream::{Event, EventStream};

pub const IMAGE_SIDE: usize = 28;
pub const SMNIST_LEN: u32 = (IMAGE_SIDE * IMAGE_SIDE) as u32;

/// Flattens a 28×28 image row by row into a single-channel stream with an
/// event wherever the pixel is nonzero. With a permutation, output step `t`
/// reads pixel `perm[t]`.
pub fn image_to_stream(image: &[u8], perm: Option<&[u32]>) -> Result<EventStream> {
    let n = SMNIST_LEN as usize;
    if image.len() != n {
        return Err(Error::ShapeMismatch {
            what: "image pixels",
            expected: n,
            actual: image.len(),
        });
    }
    let mut events = Vec::new();
    match perm {
        None => {
            for (t, &px) in image.iter().enumerate() {
                if px > 0 {
                    events.push(Event::new(t as u32, 0));
                }
            }
        }
        Some(perm) => {
            check_permutation(perm, n)?;
            for (t, &src) in perm.iter().enumerate() {
                if image[src as usize] > 0 {
                    events.push(Event::new(t as u32, 0));
                }
            }
        }
    }
    EventStream::new(SMNIST_LEN, 1, events)
}

fn check_permutation(perm: &[u32], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::ShapeMismatch {
            what: "permutation",
            expected: n,
            actual: perm.len(),
        });
    }
    let mut seen = alloc::vec![false; n];
    for &p in perm {
        let p = p as usize;
        if p >= n || core::mem::replace(&mut seen[p], true) {
            return Err(Error::Config(format!("not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Converts labelled images, applying the same permutation to all of them.
pub fn build_smnist(images: &[&[u8]], labels: &[usize], perm: Option<&[u32]>) -> Result<Vec<LabeledSample>> {
    if images.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            what: "labels",
            expected: images.len(),
            actual: labels.len(),
        });
    }
    images
        .iter()
        .zip(labels)
        .map(|(img, &l)| Ok(LabeledSample::new(image_to_stream(img, perm)?, Some(l))))
        .collect()
}

/// Nearest-neighbour resize of a row-major grayscale image.
pub fn upsample_nearest(image: &[u8], width: usize, height: usize, out_width: usize, out_height: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(out_width * out_height);
    for y in 0..out_height {
        let sy = y * height / out_height;
        for x in 0..out_width {
            out.push(image[sy * width + x * width / out_width]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn blank_and_full_images() {
        assert!(image_to_stream(&[0; 784], None).unwrap().is_empty());
        assert_eq!(image_to_stream(&[255; 784], None).unwrap().n_events(), 784);
    }

    #[test]
    fn identity_permutation() {
        let img: Vec<u8> = (0..784).map(|i| (i % 3 == 0) as u8 * 9).collect();
        let id: Vec<u32> = (0..784).collect();
        assert_eq!(image_to_stream(&img, Some(&id)).unwrap(), image_to_stream(&img, None).unwrap());
    }

    #[test]
    fn permutation_reads_source_pixel() {
        let mut img = vec![0u8; 784];
        img[10] = 1;
        let mut perm: Vec<u32> = (0..784).collect();
        perm.swap(10, 700);
        let s = image_to_stream(&img, Some(&perm)).unwrap();
        assert_eq!(s.events(), &[Event::new(700, 0)]);
    }

    #[test]
    fn shape_errors() {
        assert!(image_to_stream(&[0; 100], None).is_err());
        let bad: Vec<u32> = vec![0; 784];
        assert!(image_to_stream(&[0; 784], Some(&bad)).is_err());
        assert!(build_smnist(&[&[0; 784]], &[], None).is_err());
    }

    #[test]
    fn upsampling() {
        let img = [1u8, 2, 3, 4];
        let up = upsample_nearest(&img, 2, 2, 4, 4);
        assert_eq!(up, [1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4]);
        assert_eq!(upsample_nearest(&[0; 64], 8, 8, 28, 28).len(), 784);
    }
}
