use std::collections::BTreeMap;

/// Low-level descriptor families singled out in the selected-feature
/// analysis of the DEAM feature set.
pub const DEFAULT_FAMILY_PREFIXES: [&str; 4] = [
    "audSpec_Rfilt",
    "pcm_fftMag_spectral",
    "pcm_fftMag_mfcc",
    "pcm_fftMag_fband",
];

pub const OTHER_FAMILY: &str = "other";

/// Count feature names per family, where a name's family is the longest
/// prefix in `prefixes` that it starts with.
pub fn group_features_by_family<S: AsRef<str>, P: AsRef<str>>(
    names: &[S],
    prefixes: &[P],
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for name in names {
        let name = name.as_ref();
        let family = prefixes
            .iter()
            .map(AsRef::as_ref)
            .filter(|p| name.starts_with(p))
            .max_by_key(|p| p.len())
            .unwrap_or(OTHER_FAMILY);
        *counts.entry(family.to_string()).or_insert(0) += 1;
    }
    counts
}
