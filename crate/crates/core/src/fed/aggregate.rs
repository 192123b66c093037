use crate::geometry::RigidTransform;
use crate::splat::SplatModel;

/// Transforms every model into the parent frame and concatenates them in input order.
pub fn merge_aligned<'a, I>(parts: I, frame_id: &str) -> SplatModel
where
    I: IntoIterator<Item = (&'a SplatModel, &'a RigidTransform)>,
{
    let mut gaussians = Vec::new();
    for (model, t) in parts {
        gaussians.extend(model.gaussians.iter().map(|g| g.transformed(t)));
    }
    SplatModel::new(gaussians).with_frame(frame_id)
}

/// Edge model as the union of the pose-aligned local models (in the given order,
/// which callers keep sorted by device id).
pub fn edge_aggregate(locals: &[(SplatModel, RigidTransform)]) -> SplatModel {
    merge_aligned(locals.iter().map(|(m, t)| (m, t)), "edge")
}

/// Global model as the union of the pose-aligned edge models.
pub fn cloud_aggregate(edges: &[(SplatModel, RigidTransform)]) -> SplatModel {
    merge_aligned(edges.iter().map(|(m, t)| (m, t)), "cloud")
}
