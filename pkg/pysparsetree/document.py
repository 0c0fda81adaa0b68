from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import InvalidModel
from .ingest import BinarySchema, FeatureDescriptor
from .objectives import ObjectiveSpec
from .tree import Leaf, Split, as_dict


class FeatureRef(BaseModel):
    column: str = Field(description="Source column of the binary feature")
    threshold: Optional[float] = Field(default=None, description="Feature is 1 iff value <= threshold")
    category: Optional[str] = Field(default=None, description="Feature is 1 iff value equals category")
    aliases: Optional[List["FeatureRef"]] = Field(default=None, description="Features with identical bits")

    def descriptor(self):
        return FeatureDescriptor(
            column=self.column,
            threshold=self.threshold,
            category=self.category,
            aliases=tuple(a.descriptor() for a in self.aliases or ()),
        )

    @classmethod
    def from_descriptor(cls, descriptor, with_aliases=True):
        return cls(
            column=descriptor.column,
            threshold=descriptor.threshold,
            category=descriptor.category,
            aliases=[cls.from_descriptor(a) for a in descriptor.aliases]
            if with_aliases and descriptor.aliases
            else None,
        )


class TreeNode(BaseModel):
    feature: Optional[FeatureRef] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    prediction: Optional[int] = None
    score: Optional[float] = None


FeatureRef.model_rebuild()
TreeNode.model_rebuild()


class ObjectiveRecord(BaseModel):
    kind: str
    regularization: float
    weight: float = 1.0
    theta: Optional[float] = None

    def spec(self):
        return ObjectiveSpec(self.kind, self.regularization, self.weight, self.theta)


class TrainingMetadata(BaseModel):
    data: Optional[str] = None
    label: str
    rows: int
    positives: int
    negatives: int
    classes: int
    features: int
    bucketize: bool = False
    engine: str
    nodes: int
    iterations: int
    seconds: float
    timed_out: bool = False
    accuracy: float
    version: str


class ModelDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    binary_schema: List[FeatureRef] = Field(alias="schema")
    tree: TreeNode
    objective: ObjectiveRecord
    risk: float
    loss: float
    gap: float
    leaves: int
    metadata: TrainingMetadata

    def to_json(self):
        return self.model_dump_json(by_alias=True, exclude_none=True, indent=2)

    @classmethod
    def from_json(cls, text):
        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            raise InvalidModel(f"model document is invalid: {e}") from e

    def to_schema(self):
        return BinarySchema(tuple(ref.descriptor() for ref in self.binary_schema))

    def to_tree(self):
        """Rebuilds the in-memory tree, resolving features against the schema."""
        schema = self.to_schema()

        def build(node):
            if node.feature is None:
                return Leaf(prediction=node.prediction, score=node.score)
            key = (node.feature.column, node.feature.threshold, node.feature.category)
            try:
                j = schema.index(key)
            except KeyError:
                raise InvalidModel(f"tree splits on {key}, which the schema does not define") from None
            if node.left is None or node.right is None:
                raise InvalidModel(f"split on {node.feature.column} is missing a child")
            return Split(j, build(node.left), build(node.right))

        return build(self.tree)


def tree_node(tree, schema):
    return TreeNode.model_validate(as_dict(tree, schema))


def build_document(result, schema, objective, metadata):
    return ModelDocument(
        binary_schema=[FeatureRef.from_descriptor(d) for d in schema.features],
        tree=tree_node(result.tree, schema),
        objective=ObjectiveRecord(**objective.as_dict()),
        risk=result.risk,
        loss=result.loss,
        gap=result.gap,
        leaves=result.leaves,
        metadata=TrainingMetadata(**metadata),
    )
