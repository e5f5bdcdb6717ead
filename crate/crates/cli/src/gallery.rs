//! Bundled example spaces.

pub const GALLERY: &[(&str, &str)] = &[
    ("total_type_3pt", include_str!("../gallery/total_type_3pt.json")),
    ("grid_2x2", include_str!("../gallery/grid_2x2.json")),
    ("hausdorff_line_5pt", include_str!("../gallery/hausdorff_line_5pt.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    GALLERY.iter().map(|(n, _)| *n)
}

pub fn get(name: &str) -> Option<&'static str> {
    GALLERY.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
