// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pieces of the edit machinery shared with the merge.
#pragma once

#include "schemakit/doc.h"

namespace schemakit::doc {

/// apply_edit without formula co-evolution.
Node apply_structure(const Node& root, const DocEdit& e);

/// Same-selection rewrite of one path across `e`, given both snapshots.
NodePath rewrite_node_path(const NodePath& p, const DocEdit& e, const Node& before, const Node& after);

/// The subtree of an InsertItem with its ids for one parent.
Node instantiate_item(const DocEdit& e, const std::string& parent, std::size_t parent_count);

/// `target` with its text split into part cells, as SplitText does.
Node split_node(const Node& target, const DocEdit& e);

/// `author.seq:`, the id prefix of nodes the edit creates.
std::string edit_prefix(const DocEdit& e);

} // namespace schemakit::doc
