/** Wire types for the review server API. */

export interface PredictedPath {
  main_index: number;
  sub_index: number;
  main_name: string;
  sub_name: string;
}

export interface Alternative {
  main_name: string;
  sub_name: string;
  total: number;
}

export interface QueueItem {
  target_id: string;
  image_id: string;
  cluster_id: number | null;
  member_ids: string[];
  member_count: number;
  mode: string;
  confidence: number;
  predicted: PredictedPath;
  alternatives: Alternative[];
  thumbnail_raw: string; // base64 PNG
  thumbnail_transformed: string; // base64 PNG
}

export interface QueueResponse {
  items: QueueItem[];
  queue_depth: number;
}

export interface Stats {
  per_class_counts: Record<string, number>;
  normalized_entropy: number | null;
  queue_depth: number;
  tallies: { auto: number; review: number; remove: number };
  epsilon: number;
  probe_accuracy: number;
  kept: number;
  discarded: number;
}

export interface HierarchySubcategory {
  name: string;
  description?: string;
  characteristics: string[];
}

export interface HierarchyCategory {
  name: string;
  description?: string;
  subcategories: HierarchySubcategory[];
}

export interface Hierarchy {
  version: string;
  categories: HierarchyCategory[];
}

export type Verdict = "accept" | "override" | "discard";

export interface DecisionRequest {
  image_id?: string;
  cluster_id?: string;
  verdict: Verdict;
  main?: string;
  sub?: string;
  note?: string;
}

export interface DecisionAck {
  applied: number;
  target_id: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
